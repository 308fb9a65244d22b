#include "rcgame/allocator.hpp"

#include <algorithm>
#include <cmath>

namespace rcgame {

namespace {

long long min_bits_for(long long pixels, long long pixels_per_bit) {
  return std::max<long long>(1, pixels / pixels_per_bit);
}

long long total_uncoded_pixels(const FrameContext& ctx) {
  long long sum = 0;
  for (const auto& c : ctx.uncoded()) sum += c.geom.pixels();
  return sum;
}

}  // namespace

std::vector<CtuGeometry> partition_ctu_types(int frame_width, int frame_height,
                                             int lcu) {
  if (frame_width <= 0 || frame_height <= 0 || lcu <= 0) {
    throw std::domain_error("frame dimensions must be positive");
  }
  const int nx = (frame_width + lcu - 1) / lcu;
  const int ny = (frame_height + lcu - 1) / lcu;
  const int rem_w = frame_width % lcu;
  const int rem_h = frame_height % lcu;

  std::vector<CtuGeometry> out;
  out.reserve(static_cast<std::size_t>(nx) * ny);
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      CtuGeometry g;
      g.index_j = y * nx + x;
      const bool right = (x == nx - 1) && rem_w != 0;
      const bool bottom = (y == ny - 1) && rem_h != 0;
      g.width = right ? rem_w : lcu;
      g.height = bottom ? rem_h : lcu;
      g.type = right && bottom ? CtuType::Corner
               : right         ? CtuType::RightEdge
               : bottom        ? CtuType::BottomEdge
                               : CtuType::Full;
      out.push_back(g);
    }
  }
  return out;
}

std::map<CtuType, double> type_budget(const FrameContext& ctx) {
  std::map<CtuType, long long> pixels;
  long long total = 0;
  for (const auto& c : ctx.uncoded()) {
    pixels[c.geom.type] += c.geom.pixels();
    total += c.geom.pixels();
  }
  std::map<CtuType, double> out;
  for (const auto& [type, m] : pixels) {
    out[type] = ctx.remaining_bits * static_cast<double>(m) /
                static_cast<double>(total);
  }
  return out;
}

double scale_factor(const FrameContext& ctx, const CtuRecord& ctu,
                    double varsigma) {
  const auto budgets = type_budget(ctx);
  double need = 0.0;
  for (const auto& b : ctx.uncoded()) {
    if (b.geom.type != ctu.geom.type) continue;
    if (!(b.d_tilde > 0.0)) {
      throw std::domain_error("scale factor needs positive distortion history");
    }
    // bpp required to reach the historical distortion: (k/d~)^(1/c)
    need += static_cast<double>(b.geom.pixels()) *
            std::pow(b.params.k / b.d_tilde, 1.0 / b.params.c);
  }
  return varsigma * budgets.at(ctu.geom.type) / need;
}

double min_utility(const CtuRecord& ctu, double scale, double delta) {
  if (!(ctu.d_tilde > 0.0) || !(delta > 0.0)) {
    throw std::domain_error("min utility needs positive history and delta");
  }
  return std::min(scale, 1.0) / (delta * ctu.d_tilde);
}

double clip_lambda(double lambda_raw, double lambda_nei, double lambda_est) {
  double lambda = lambda_raw;
  if (lambda_nei > 0.0) {
    lambda = std::max(std::min(lambda, lambda_nei * kNeighborClipRatio),
                      lambda_nei / kNeighborClipRatio);
  }
  if (lambda_est > 0.0) {
    lambda = std::max(std::min(lambda, lambda_est * kFrameClipRatio),
                      lambda_est / kFrameClipRatio);
  } else {
    lambda = std::max(std::min(lambda, kAbsoluteClipHi), kAbsoluteClipLo);
  }
  if (lambda < kLambdaFloor) lambda = kLambdaFloor;
  return lambda;
}

long long refine_bits(double remaining_bits,
                      std::span<const long long> uncoded_pixels,
                      std::span<const double> estimated_bpps,
                      long long head_pixels, double head_bpp,
                      long long min_bits) {
  const double w = std::min<double>(4.0, static_cast<double>(uncoded_pixels.size()));
  double planned = 0.0;
  for (std::size_t j = 0; j < uncoded_pixels.size(); ++j) {
    planned += static_cast<double>(uncoded_pixels[j]) * estimated_bpps[j];
  }
  const double refined = std::floor(static_cast<double>(head_pixels) * head_bpp -
                                    (planned - remaining_bits) / w + 0.5);
  return std::max<long long>(static_cast<long long>(refined), min_bits);
}

std::vector<double> compute_min_utilities(const FrameContext& ctx,
                                          double varsigma) {
  std::map<CtuType, double> scales;
  const double delta = ctx.delta();
  std::vector<double> out;
  out.reserve(ctx.uncoded().size());
  for (const auto& c : ctx.uncoded()) {
    auto it = scales.find(c.geom.type);
    if (it == scales.end()) {
      it = scales.emplace(c.geom.type, scale_factor(ctx, c, varsigma)).first;
    }
    out.push_back(min_utility(c, it->second, delta));
  }
  return out;
}

AllocationDecision allocate_next_ctu(FrameContext& ctx,
                                     const AllocatorConfig& cfg) {
  const auto un = ctx.uncoded();
  if (un.empty()) throw std::logic_error("no uncoded CTUs");
  const CtuRecord& head = un[0];
  const long long total_pixels = total_uncoded_pixels(ctx);

  AllocationDecision decision;
  std::vector<double> est_bpps;
  bool nash_done = false;

  const bool history_ok =
      !cfg.proportional_baseline && ctx.remaining_bits > 0.0 &&
      std::all_of(un.begin(), un.end(),
                  [](const CtuRecord& c) { return c.d_tilde > 0.0; });

  if (history_ok) {
    try {
      const auto u0s = compute_min_utilities(ctx, cfg.varsigma);
      std::vector<BargainCtu> players;
      players.reserve(un.size());
      for (std::size_t j = 0; j < un.size(); ++j) {
        players.push_back({un[j].params, u0s[j], un[j].geom.pixels()});
      }
      if (cfg.eta_once_per_frame && ctx.eta_cached) {
        est_bpps.reserve(players.size());
        for (const auto& p : players) {
          est_bpps.push_back(target_bpp(p.params, p.u0, ctx.cached_eta));
        }
        decision.lambda = optimal_lambda(players[0].params, players[0].u0,
                                         ctx.cached_eta);
      } else {
        const NashSolution sol =
            nash_allocate(players, ctx.remaining_bits, cfg.solver);
        est_bpps = sol.bpps;
        decision.lambda = sol.lambdas[0];
        if (cfg.eta_once_per_frame) {
          ctx.cached_eta = sol.eta_star;
          ctx.eta_cached = true;
        }
      }
      decision.target_bpp = est_bpps[0];
      decision.source = DecisionSource::Nash;
      nash_done = true;
    } catch (const InfeasibleError&) {
      nash_done = false;
    }
  }

  if (!nash_done) {
    const double floor_bpp = 1.0 / static_cast<double>(cfg.min_bits_pixels_per_bit);
    const double r_eq =
        std::max(ctx.remaining_bits / static_cast<double>(total_pixels),
                 floor_bpp);
    est_bpps.assign(un.size(), r_eq);
    decision.lambda = lambda_at_rate(head.params, r_eq);
    decision.target_bpp = r_eq;
    decision.source = DecisionSource::PlainLambdaFallback;
  }

  decision.lambda =
      clip_lambda(decision.lambda, ctx.neighbor_lambda, ctx.frame_lambda_est);

  std::vector<long long> pixels;
  pixels.reserve(un.size());
  for (const auto& c : un) pixels.push_back(c.geom.pixels());
  decision.target_bits = refine_bits(
      ctx.remaining_bits, pixels, est_bpps, head.geom.pixels(),
      decision.target_bpp,
      min_bits_for(head.geom.pixels(), cfg.min_bits_pixels_per_bit));
  return decision;
}

void commit_actual(FrameContext& ctx, const CodingResult& res) {
  if (ctx.coded >= ctx.ctus.size()) {
    throw std::logic_error("commit without uncoded CTU");
  }
  CtuRecord& head = ctx.ctus[ctx.coded];
  if (res.bits_actual > 0) {
    head.params = update_params(head.params, res).params;
  }
  const double bits = static_cast<double>(res.bits_actual);
  if (bits > ctx.remaining_bits) {
    ctx.remaining_bits = 0.0;
    ctx.overshoot = true;
  } else {
    ctx.remaining_bits -= bits;
  }
  if (res.lambda_actual > 0.0) {
    ctx.neighbor_lambda = res.lambda_actual;
  }
  ++ctx.coded;
}

std::vector<AllocationDecision> allocate_intra_frame(
    const FrameContext& ctx, const AllocatorConfig& cfg) {
  const auto un = ctx.uncoded();
  if (un.empty()) throw std::logic_error("no uncoded CTUs");
  const long long total_pixels = total_uncoded_pixels(ctx);
  const double r = std::max(ctx.remaining_bits / static_cast<double>(total_pixels),
                            1.0 / static_cast<double>(cfg.min_bits_pixels_per_bit));
  std::vector<AllocationDecision> out;
  out.reserve(un.size());
  for (const auto& c : un) {
    AllocationDecision d;
    d.target_bpp = r;
    d.target_bits = std::max<long long>(
        static_cast<long long>(std::floor(static_cast<double>(c.geom.pixels()) * r + 0.5)),
        min_bits_for(c.geom.pixels(), cfg.min_bits_pixels_per_bit));
    d.lambda = std::max(lambda_at_rate(c.params, r), kLambdaFloor);
    d.source = DecisionSource::IntraProportional;
    out.push_back(d);
  }
  return out;
}

double estimate_frame_lambda(const FrameContext& ctx) {
  const auto un = ctx.uncoded();
  if (un.empty() || !(ctx.remaining_bits > 0.0)) return 0.0;
  // The estimate anchors the frame clip band, so it must make the
  // *clipped* plan meet the budget: CTUs whose equal-bpp lambda gets
  // pinned at a band edge stop responding to in-frame feedback, and an
  // estimate that ignores the band leaves a systematic bit miss.
  // total(x) is continuous and non-increasing in the candidate estimate
  // x; where the plan is met on a plateau, return its center.
  double pixels = 0.0;
  for (const auto& c : un) pixels += static_cast<double>(c.geom.pixels());
  std::vector<double> raw;
  raw.reserve(un.size());
  for (const auto& c : un) {
    raw.push_back(lambda_at_rate(c.params, ctx.remaining_bits / pixels));
  }
  auto bits_at = [&](double est) {
    double sum = 0.0;
    for (std::size_t j = 0; j < un.size(); ++j) {
      const double lambda = std::max(
          std::min(raw[j], est * kFrameClipRatio), est / kFrameClipRatio);
      sum += static_cast<double>(un[j].geom.pixels()) *
             rate_at_lambda(un[j].params, lambda);
    }
    return sum;
  };
  // Relative slack so rounding on the plateau cannot push both edge
  // searches to the same side.
  const double tol = 1e-9 * ctx.remaining_bits;
  auto bisect = [&](bool left_edge) {
    double lo = 1e-6;
    double hi = 1e9;
    if (bits_at(lo) <= ctx.remaining_bits) return lo;
    if (bits_at(hi) >= ctx.remaining_bits) return hi;
    for (int it = 0; it < 100 && hi - lo > 1e-12 * lo; ++it) {
      const double mid = std::sqrt(lo * hi);
      const double b = bits_at(mid);
      const bool go_right = left_edge ? b > ctx.remaining_bits + tol
                                      : b >= ctx.remaining_bits - tol;
      (go_right ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
  };
  return std::sqrt(bisect(true) * bisect(false));
}

double qp_from_lambda(double lambda) {
  return 4.2005 * std::log(lambda) + 13.7122;
}

double qstep_from_lambda(double lambda) {
  return std::pow(2.0, (qp_from_lambda(lambda) - 4.0) / 6.0);
}

}  // namespace rcgame
