#ifndef RCGAME_NASH_SOLVER_HPP
#define RCGAME_NASH_SOLVER_HPP

#include <span>
#include <stdexcept>
#include <vector>

#include "rcgame/rd_model.hpp"

namespace rcgame {

/// One bargaining participant: a CTU with its RD model, its minimal
/// utility (reciprocal distortion floor) and its pixel count.
struct BargainCtu {
  RdParams params;
  double u0 = 0.0;     // minimal utility, > 0
  long long pixels = 0;
};

/// Newton iteration settings for the eta equation. eta0 <= 0 selects the
/// automatic start point mean(c) / (exp(xi / sum(1/c)) - 1), which is
/// exact when all c are equal.
struct NewtonConfig {
  double eta0 = 0.0;
  double tau = 1e-3;
  int max_iters = 100;
};

struct EtaResult {
  double eta = 0.0;
  int iterations = 0;
  bool fallback_used = false;  // guarded bisection engaged
};

struct NashSolution {
  double eta_star = 0.0;
  std::vector<double> lambdas;  // per CTU, same order as input
  std::vector<double> bpps;
  int iterations = 0;
  bool fallback_used = false;
};

/// Thrown when no positive eta solves f(eta) = xi (xi <= 0, i.e. the
/// budget is generous enough that the bargaining model does not apply)
/// or when a solution would leave the model's validity region.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// xi = sum_j (1/c_j) ln(u0_j * k_j) - N * ln(budget / (mean_pixels * N)).
double compute_xi(std::span<const BargainCtu> ctus, double budget_bits,
                  double mean_pixels);

/// f(eta) = sum_j (1/c_j) ln(c_j/eta + 1); strictly decreasing,
/// maps (0, inf) onto (0, inf).
double f_eta(std::span<const BargainCtu> ctus, double eta);

/// Analytic derivative f'(eta) = -sum_j 1 / (eta * (eta + c_j)).
double f_eta_derivative(std::span<const BargainCtu> ctus, double eta);

/// Newton root of f(eta) = xi with the stop rule
/// |Z^x - Z^{x+1}| < tau or |Z^{x+1}| < tau, falling back to a bracketed
/// bisection if the iterate leaves (0, inf) or the cap is hit.
EtaResult solve_eta(std::span<const BargainCtu> ctus, double xi,
                    const NewtonConfig& cfg);

/// lambda = c * k^(-1/c) * ((c + eta) / (eta * u0))^((c+1)/c).
double optimal_lambda(const RdParams& p, double u0, double eta_star);

/// r = (k * u0 * eta / (c + eta))^(1/c); consistent with
/// rate_at_lambda(p, optimal_lambda(p, u0, eta)).
double target_bpp(const RdParams& p, double u0, double eta_star);

/// Full bargaining solve: xi, eta*, then per-CTU lambda and bpp. The
/// returned bpps satisfy sum ln r_j = N ln(budget / (mean_pixels * N)).
NashSolution nash_allocate(std::span<const BargainCtu> ctus,
                           double budget_bits, const NewtonConfig& cfg);

/// Bargaining objective at a candidate allocation, evaluated as
/// sum_j ln(u0_j - u_j(r_j)). In the solvable regime (xi > 0) every
/// feasible allocation near the optimum leaves all utilities strictly
/// below their floors, so the deficits are positive; returns -inf if
/// any deficit is non-positive.
double bargain_objective(std::span<const BargainCtu> ctus,
                         std::span<const double> bpps);

}  // namespace rcgame

#endif
