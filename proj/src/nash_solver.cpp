#include "rcgame/nash_solver.hpp"

#include <cmath>
#include <limits>

namespace rcgame {

namespace {

double mean_pixels_of(std::span<const BargainCtu> ctus) {
  double sum = 0.0;
  for (const auto& c : ctus) sum += static_cast<double>(c.pixels);
  return sum / static_cast<double>(ctus.size());
}

double default_eta0(std::span<const BargainCtu> ctus, double xi) {
  double c_mean = 0.0;
  double inv_c_sum = 0.0;
  for (const auto& c : ctus) {
    c_mean += c.params.c;
    inv_c_sum += 1.0 / c.params.c;
  }
  c_mean /= static_cast<double>(ctus.size());
  double denom = std::expm1(xi / inv_c_sum);
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    return 1.0;
  }
  return c_mean / denom;
}

// Bracketed bisection on f(eta) = xi; f is strictly decreasing.
double bisect_eta(std::span<const BargainCtu> ctus, double xi, double seed) {
  double lo = seed;
  double hi = seed;
  while (f_eta(ctus, lo) <= xi) lo *= 0.5;
  while (f_eta(ctus, hi) >= xi) hi *= 2.0;
  for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    if (f_eta(ctus, mid) > xi) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double compute_xi(std::span<const BargainCtu> ctus, double budget_bits,
                  double mean_pixels) {
  if (ctus.empty()) throw std::domain_error("empty CTU set");
  if (!(budget_bits > 0.0)) throw std::domain_error("budget must be positive");
  if (!(mean_pixels > 0.0)) throw std::domain_error("mean pixels must be positive");
  const double n = static_cast<double>(ctus.size());
  double sum = 0.0;
  for (const auto& c : ctus) {
    const double arg = c.u0 * c.params.k;
    if (!(arg > 0.0)) throw std::domain_error("u0 * k must be positive");
    sum += std::log(arg) / c.params.c;
  }
  return sum - n * std::log(budget_bits / (mean_pixels * n));
}

double f_eta(std::span<const BargainCtu> ctus, double eta) {
  if (!(eta > 0.0)) throw std::domain_error("eta must be positive");
  double sum = 0.0;
  for (const auto& c : ctus) {
    sum += std::log1p(c.params.c / eta) / c.params.c;
  }
  return sum;
}

double f_eta_derivative(std::span<const BargainCtu> ctus, double eta) {
  if (!(eta > 0.0)) throw std::domain_error("eta must be positive");
  double sum = 0.0;
  for (const auto& c : ctus) {
    sum += 1.0 / (eta * (eta + c.params.c));
  }
  return -sum;
}

EtaResult solve_eta(std::span<const BargainCtu> ctus, double xi,
                    const NewtonConfig& cfg) {
  if (ctus.empty()) throw std::domain_error("empty CTU set");
  if (!(xi > 0.0)) {
    throw InfeasibleError("no positive root: xi <= 0");
  }
  EtaResult out;
  double eta = cfg.eta0 > 0.0 ? cfg.eta0 : default_eta0(ctus, xi);
  double z = f_eta(ctus, eta) - xi;
  for (int x = 0; x < cfg.max_iters; ++x) {
    const double v = f_eta_derivative(ctus, eta);
    const double next = eta - z / v;
    if (!(next > 0.0) || !std::isfinite(next)) {
      out.eta = bisect_eta(ctus, xi, eta);
      out.iterations = x + 1;
      out.fallback_used = true;
      return out;
    }
    const double z_next = f_eta(ctus, next) - xi;
    eta = next;
    ++out.iterations;
    if (std::fabs(z - z_next) < cfg.tau || std::fabs(z_next) < cfg.tau) {
      out.eta = eta;
      return out;
    }
    z = z_next;
  }
  out.eta = bisect_eta(ctus, xi, eta);
  out.fallback_used = true;
  return out;
}

double optimal_lambda(const RdParams& p, double u0, double eta_star) {
  if (!(u0 > 0.0) || !(eta_star > 0.0)) {
    throw std::domain_error("u0 and eta must be positive");
  }
  // Evaluated in log domain: the exponent (c+1)/c can exceed 30 for
  // small c and overflow a direct pow.
  const double c = p.c;
  const double log_lambda = std::log(c) - std::log(p.k) / c +
                            (c + 1.0) / c *
                                (std::log(c + eta_star) - std::log(eta_star) -
                                 std::log(u0));
  return std::exp(log_lambda);
}

double target_bpp(const RdParams& p, double u0, double eta_star) {
  if (!(u0 > 0.0) || !(eta_star > 0.0)) {
    throw std::domain_error("u0 and eta must be positive");
  }
  const double c = p.c;
  const double log_r = (std::log(p.k) + std::log(u0) + std::log(eta_star) -
                        std::log(c + eta_star)) /
                       c;
  return std::exp(log_r);
}

NashSolution nash_allocate(std::span<const BargainCtu> ctus,
                           double budget_bits, const NewtonConfig& cfg) {
  const double mean_pixels = mean_pixels_of(ctus);
  const double xi = compute_xi(ctus, budget_bits, mean_pixels);
  const EtaResult eta = solve_eta(ctus, xi, cfg);

  NashSolution sol;
  sol.eta_star = eta.eta;
  sol.iterations = eta.iterations;
  sol.fallback_used = eta.fallback_used;
  sol.lambdas.reserve(ctus.size());
  sol.bpps.reserve(ctus.size());
  for (const auto& c : ctus) {
    const double lambda = optimal_lambda(c.params, c.u0, eta.eta);
    const double r = target_bpp(c.params, c.u0, eta.eta);
    // At the stationary point u = eta*u0/(c+eta), strictly inside (0, u0).
    const double u = std::pow(r, c.params.c) / c.params.k;
    if (!(lambda > 0.0) || !(r > 0.0) || !(u > 0.0) || !(u < c.u0) ||
        !std::isfinite(lambda) || !std::isfinite(r)) {
      throw InfeasibleError("solution left the model's validity region");
    }
    sol.lambdas.push_back(lambda);
    sol.bpps.push_back(r);
  }
  return sol;
}

double bargain_objective(std::span<const BargainCtu> ctus,
                         std::span<const double> bpps) {
  double sum = 0.0;
  for (std::size_t j = 0; j < ctus.size(); ++j) {
    const double u = std::pow(bpps[j], ctus[j].params.c) / ctus[j].params.k;
    const double deficit = ctus[j].u0 - u;
    if (!(deficit > 0.0)) {
      return -std::numeric_limits<double>::infinity();
    }
    sum += std::log(deficit);
  }
  return sum;
}

}  // namespace rcgame
