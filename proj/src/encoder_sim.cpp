#include "rcgame/encoder_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace rcgame {

namespace {

constexpr double kTruthCMin = 0.05;
constexpr double kTruthCMax = 5.0;
constexpr double kTruthKMin = 0.01;
constexpr double kTruthKMax = 1e6;

struct Field {
  int nx = 0, ny = 0;
  std::vector<double> v;
  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * nx + x]; }
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * nx + x]; }
};

// Bilinear sample of a coarse node grid at CTU (x, y) of an (nx, ny) grid.
double sample(const Field& f, double fx, double fy) {
  const int x0 = std::min(static_cast<int>(fx), f.nx - 2);
  const int y0 = std::min(static_cast<int>(fy), f.ny - 2);
  const double tx = fx - x0;
  const double ty = fy - y0;
  return f.at(x0, y0) * (1 - tx) * (1 - ty) + f.at(x0 + 1, y0) * tx * (1 - ty) +
         f.at(x0, y0 + 1) * (1 - tx) * ty + f.at(x0 + 1, y0 + 1) * tx * ty;
}

int level_for_frame(int i, int gop) {
  if (i == 0) return 0;
  const int pos = (i - 1) % gop;
  if (pos == gop - 1) return 1;
  return pos % 2 == 0 ? 3 : 2;
}

}  // namespace

SequenceTrace generate_trace(const TraceGenConfig& cfg) {
  const auto geoms = partition_ctu_types(cfg.width, cfg.height);
  const int nx = (cfg.width + kLcuSize - 1) / kLcuSize;
  const int ny = (cfg.height + kLcuSize - 1) / kLcuSize;

  SequenceTrace trace;
  trace.name = cfg.name;
  trace.width = cfg.width;
  trace.height = cfg.height;
  trace.frame_count = cfg.frame_count;
  trace.gop_size = cfg.gop_size;
  trace.fps = cfg.fps;
  trace.ref_bitrate = cfg.ref_bitrate > 0.0
                          ? cfg.ref_bitrate
                          : 0.04 * cfg.width * cfg.height * cfg.fps;
  trace.noise_seed = cfg.seed;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Field log_k, log_c;
  log_k.nx = log_c.nx = std::max(2, nx / 3 + 2);
  log_k.ny = log_c.ny = std::max(2, ny / 3 + 2);
  log_k.v.resize(static_cast<std::size_t>(log_k.nx) * log_k.ny);
  log_c.v.resize(log_k.v.size());
  for (auto& v : log_k.v) v = std::log(10.0) + 0.8 * gauss(rng);
  for (auto& v : log_c.v) v = cfg.c_bias + 0.35 * gauss(rng);

  trace.hierarchy.resize(cfg.frame_count);
  trace.truth.resize(cfg.frame_count);
  for (int i = 0; i < cfg.frame_count; ++i) {
    trace.hierarchy[i] = level_for_frame(i, cfg.gop_size);
    if (i > 0) {
      const double trend =
          (cfg.trend_frames == 0 || i <= cfg.trend_frames) ? cfg.k_trend : 0.0;
      for (auto& v : log_k.v) v += cfg.sigma_params * gauss(rng) + trend;
      for (auto& v : log_c.v) v += 0.4 * cfg.sigma_params * gauss(rng);
    }
    auto& frame = trace.truth[i];
    frame.reserve(geoms.size());
    const double sx = nx > 1 ? static_cast<double>(log_k.nx - 1) / (nx - 1) : 0.0;
    const double sy = ny > 1 ? static_cast<double>(log_k.ny - 1) / (ny - 1) : 0.0;
    for (const auto& g : geoms) {
      const double fx = (g.index_j % nx) * sx;
      const double fy = (g.index_j / nx) * sy;
      RdParams p;
      p.c = std::clamp(std::exp(sample(log_c, fx, fy)), kTruthCMin, kTruthCMax);
      p.k = std::clamp(std::exp(sample(log_k, fx, fy)), kTruthKMin, kTruthKMax);
      frame.push_back(p);
    }
  }
  return trace;
}

CodingResult encode_ctu(const RdParams& truth,
                        const AllocationDecision& decision, long long pixels,
                        const NoiseModel& noise, std::mt19937_64& rng) {
  if (!(decision.lambda > 0.0)) {
    throw std::domain_error("decision lambda must be positive");
  }
  double eps = 0.0;
  if (noise.sigma_bits > 0.0) {
    std::normal_distribution<double> gauss(0.0, noise.sigma_bits);
    eps = gauss(rng);
  }
  CodingResult res;
  res.lambda_actual = decision.lambda;
  res.r_actual = rate_at_lambda(truth, decision.lambda) * std::exp(eps);
  res.d_actual = distortion_at_rate(truth, res.r_actual);
  res.bits_actual = std::llround(res.r_actual * static_cast<double>(pixels));
  return res;
}

std::vector<double> frame_target_schedule(const SequenceTrace& trace,
                                          double bitrate, double fps,
                                          const double (&weights)[4]) {
  if (!(bitrate > 0.0) || !(fps > 0.0)) {
    throw std::domain_error("bitrate and fps must be positive");
  }
  std::vector<double> out(trace.frame_count, 0.0);
  const double per_frame = bitrate / fps;
  int begin = 0;
  while (begin < trace.frame_count) {
    // Frame 0 forms its own chunk (intra); then GOP-sized chunks.
    const int len = begin == 0
                        ? 1
                        : std::min(trace.gop_size, trace.frame_count - begin);
    double wsum = 0.0;
    for (int i = begin; i < begin + len; ++i) {
      wsum += weights[std::clamp(trace.hierarchy[i], 0, 3)];
    }
    const double scale = len * per_frame / wsum;
    for (int i = begin; i < begin + len; ++i) {
      out[i] = scale * weights[std::clamp(trace.hierarchy[i], 0, 3)];
    }
    begin += len;
  }
  return out;
}

double frame_target_bits(const SequenceTrace& trace, double bitrate, double fps,
                         int frame_index) {
  return frame_target_schedule(trace, bitrate, fps).at(frame_index);
}

SequenceReport run_sequence(const SequenceTrace& trace, const RunConfig& cfg) {
  const double bitrate = cfg.bitrate > 0.0 ? cfg.bitrate : trace.ref_bitrate;
  const double fps = cfg.fps > 0.0 ? cfg.fps : trace.fps;
  const std::uint64_t seed = cfg.seed != 0 ? cfg.seed : trace.noise_seed;

  const auto geoms = partition_ctu_types(trace.width, trace.height);
  const std::size_t n_ctu = geoms.size();
  std::vector<RdParams> beliefs(n_ctu);  // persists across frames

  // Running mean of actual distortion per (CTU, temporal level).
  struct Hist {
    double sum = 0.0;
    int n = 0;
  };
  std::vector<std::array<Hist, 4>> history(n_ctu);
  std::array<double, 4> prev_qstep{};

  std::mt19937_64 rng(seed);
  const auto schedule = frame_target_schedule(trace, bitrate, fps);

  SequenceReport report;
  report.frames.reserve(trace.frame_count);
  // Accumulated (scheduled - actual) bits; absorbed over a sliding window
  // of upcoming frames so one bad frame cannot stall the whole controller,
  // collapsing to full absorption at the end of the sequence.
  double carry = 0.0;

  for (int i = 0; i < trace.frame_count; ++i) {
    const int level = std::clamp(trace.hierarchy[i], 0, 3);
    const bool intra = (i == 0);
    const int absorb = std::min(8, trace.frame_count - i);
    const double target = schedule[i] + carry / absorb;

    FrameContext ctx;
    ctx.remaining_bits = std::max(target, 0.0);
    ctx.hierarchy_level = level;
    ctx.ctus.reserve(n_ctu);
    for (std::size_t j = 0; j < n_ctu; ++j) {
      CtuRecord rec;
      rec.geom = geoms[j];
      rec.params = beliefs[j];
      const Hist& h = history[j][level];
      rec.d_tilde = h.n > 0 ? h.sum / h.n : 0.0;
      ctx.ctus.push_back(rec);
    }
    ctx.frame_lambda_est = estimate_frame_lambda(ctx);
    ctx.q_hat = ctx.frame_lambda_est > 0.0
                    ? qstep_from_lambda(ctx.frame_lambda_est)
                    : 0.0;
    ctx.q = prev_qstep[level];

    FrameLog flog;
    flog.frame = i;
    flog.level = level;
    flog.intra = intra;
    flog.target_bits = target;
    flog.objective_game = std::numeric_limits<double>::quiet_NaN();
    flog.objective_baseline = std::numeric_limits<double>::quiet_NaN();

    // At the first point in the frame where the bargaining path engages,
    // compare its objective against the equal-bpp split of the same
    // remaining budget under identical minimal utilities.
    auto record_objectives = [&]() {
      try {
        const auto u0s = compute_min_utilities(ctx, cfg.alloc.varsigma);
        const auto un = ctx.uncoded();
        std::vector<BargainCtu> players;
        double pixels = 0.0;
        for (std::size_t j = 0; j < un.size(); ++j) {
          players.push_back({un[j].params, u0s[j], un[j].geom.pixels()});
          pixels += static_cast<double>(un[j].geom.pixels());
        }
        const NashSolution sol =
            nash_allocate(players, ctx.remaining_bits, cfg.alloc.solver);
        const std::vector<double> equal_bpp(players.size(),
                                            ctx.remaining_bits / pixels);
        flog.objective_game = bargain_objective(players, sol.bpps);
        flog.objective_baseline = bargain_objective(players, equal_bpp);
      } catch (const InfeasibleError&) {
      }
    };

    double mse_weighted = 0.0;
    double pixel_total = 0.0;
    double log_bpp_sum = 0.0;
    double bpp_sum = 0.0;
    long long frame_bits = 0;

    auto encode_and_commit = [&](const AllocationDecision& decision) {
      const std::size_t j = ctx.coded;
      const CodingResult res = encode_ctu(trace.truth[i][j], decision,
                                          geoms[j].pixels(), cfg.noise, rng);
      commit_actual(ctx, res);

      CtuLog clog;
      clog.frame = i;
      clog.index = static_cast<int>(j);
      clog.source = decision.source;
      clog.lambda = decision.lambda;
      clog.target_bpp = decision.target_bpp;
      clog.target_bits = decision.target_bits;
      clog.actual_bits = res.bits_actual;
      clog.d_actual = res.d_actual;
      report.ctus.push_back(clog);

      const double m = static_cast<double>(geoms[j].pixels());
      mse_weighted += m * res.d_actual;
      pixel_total += m;
      const double bpp = std::max(static_cast<double>(res.bits_actual), 1.0) / m;
      log_bpp_sum += std::log(bpp);
      bpp_sum += bpp;
      frame_bits += res.bits_actual;
      history[j][level].sum += res.d_actual;
      history[j][level].n += 1;
      if (decision.source == DecisionSource::Nash) flog.nash_ran = true;
    };

    if (intra) {
      for (const auto& decision : allocate_intra_frame(ctx, cfg.alloc)) {
        encode_and_commit(decision);
      }
    } else {
      while (ctx.coded < ctx.ctus.size()) {
        const AllocationDecision decision = allocate_next_ctu(ctx, cfg.alloc);
        if (decision.source == DecisionSource::Nash &&
            std::isnan(flog.objective_game)) {
          record_objectives();
        }
        encode_and_commit(decision);
      }
    }

    for (std::size_t j = 0; j < n_ctu; ++j) beliefs[j] = ctx.ctus[j].params;
    if (ctx.q_hat > 0.0) prev_qstep[level] = ctx.q_hat;
    carry += schedule[i] - static_cast<double>(frame_bits);

    flog.actual_bits = frame_bits;
    flog.mean_mse = mse_weighted / pixel_total;
    flog.geo_mean_bpp = std::exp(log_bpp_sum / static_cast<double>(n_ctu));
    flog.arith_mean_bpp = bpp_sum / static_cast<double>(n_ctu);
    report.frames.push_back(flog);
    report.actual_total_bits += frame_bits;
  }
  for (double s : schedule) report.target_total_bits += s;
  return report;
}

}  // namespace rcgame
