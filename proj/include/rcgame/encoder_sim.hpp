#ifndef RCGAME_ENCODER_SIM_HPP
#define RCGAME_ENCODER_SIM_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rcgame/allocator.hpp"

namespace rcgame {

/// Ground truth driving the virtual encoder: per-frame, per-CTU
/// hyperbolic RD curves plus the noise seed.
struct SequenceTrace {
  std::string name;
  int width = 0;
  int height = 0;
  int frame_count = 0;
  int gop_size = 0;
  double fps = 0.0;
  double ref_bitrate = 0.0;  // bits per second
  std::uint64_t noise_seed = 0;
  std::vector<int> hierarchy;                // temporal level per frame
  std::vector<std::vector<RdParams>> truth;  // [frame][ctu raster index]
};

struct NoiseModel {
  double sigma_bits = 0.1;    // lognormal sigma on produced bits
  double sigma_params = 0.05; // frame-to-frame drift of ground-truth (c, k)
};

struct TraceGenConfig {
  std::string name = "synthetic";
  int width = 1280;
  int height = 720;
  int frame_count = 32;
  int gop_size = 4;
  double fps = 50.0;
  double ref_bitrate = 0.0;  // 0: derived from 0.04 bpp
  std::uint64_t seed = 1;
  double sigma_params = 0.05;
  // Deterministic drift of ln(k) per frame. Negative values make content
  // progressively easier, so distortion history outruns the budget and
  // the bargaining path engages; positive values do the opposite.
  double k_trend = 0.0;
  // Apply k_trend only to the first trend_frames frames (0: all frames),
  // modelling content that changes and then settles.
  int trend_frames = 0;
  // Shift of the ln(c) field mean; negative values flatten the RD curves.
  double c_bias = 0.0;
};

/// Spatially correlated (c, k) fields drifting over time.
SequenceTrace generate_trace(const TraceGenConfig& cfg);

/// Encode one CTU at the decided lambda against the ground-truth curve:
/// r = rate(truth, lambda) * exp(eps), eps ~ N(0, sigma_bits^2).
CodingResult encode_ctu(const RdParams& truth,
                        const AllocationDecision& decision, long long pixels,
                        const NoiseModel& noise, std::mt19937_64& rng);

inline constexpr double kDefaultLevelWeights[4] = {1.0, 0.6, 0.4, 0.25};

/// Per-frame bit budgets: temporal-level weights renormalized inside each
/// GOP so the GOP total equals gop_frames * bitrate / fps.
std::vector<double> frame_target_schedule(
    const SequenceTrace& trace, double bitrate, double fps,
    const double (&weights)[4] = kDefaultLevelWeights);

double frame_target_bits(const SequenceTrace& trace, double bitrate, double fps,
                         int frame_index);

struct RunConfig {
  AllocatorConfig alloc;
  NoiseModel noise;
  double bitrate = 0.0;     // 0: trace reference bitrate
  double fps = 0.0;         // 0: trace fps
  std::uint64_t seed = 0;   // 0: trace noise seed
};

struct CtuLog {
  int frame = 0;
  int index = 0;
  DecisionSource source = DecisionSource::Nash;
  double lambda = 0.0;
  double target_bpp = 0.0;
  long long target_bits = 0;
  long long actual_bits = 0;
  double d_actual = 0.0;
};

struct FrameLog {
  int frame = 0;
  int level = 0;
  bool intra = false;
  double target_bits = 0.0;
  long long actual_bits = 0;
  double mean_mse = 0.0;  // pixel-weighted
  double geo_mean_bpp = 0.0;
  double arith_mean_bpp = 0.0;
  bool nash_ran = false;
  // Bargaining objective at the frame-start state: the solver's
  // allocation vs the equal-bpp baseline under the same minimal
  // utilities. NaN when the NASH path was unavailable.
  double objective_game = 0.0;
  double objective_baseline = 0.0;
};

struct SequenceReport {
  std::vector<FrameLog> frames;
  std::vector<CtuLog> ctus;
  double target_total_bits = 0.0;
  long long actual_total_bits = 0;
};

/// Closed-loop run of the allocator against the virtual encoder.
SequenceReport run_sequence(const SequenceTrace& trace, const RunConfig& cfg);

}  // namespace rcgame

#endif
