#ifndef RCGAME_METRICS_HPP
#define RCGAME_METRICS_HPP

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rcgame/encoder_sim.hpp"

namespace rcgame {

/// 100 * |target - actual| / target.
double rc_error(double target_bits, double actual_bits);

/// 10 * log10(255^2 / mse), 8-bit peak signal.
double psnr_proxy(double mse);

struct FluctuationStats {
  double variance = 0.0;  // population variance
  double mean = 0.0;
};

FluctuationStats fluctuation_stats(std::span<const double> series);

struct RunMetrics {
  double rc_error_percent = 0.0;
  double mean_psnr = 0.0;
  double psnr_variance = 0.0;
  double bits_mean = 0.0;
  double bits_variance = 0.0;
  std::vector<double> per_frame_bits;
  std::vector<double> per_frame_psnr;
};

RunMetrics compute_metrics(const SequenceReport& report);

struct MeanPair {
  double geometric = 0.0;
  double arithmetic = 0.0;
};

/// Per-frame geometric vs arithmetic mean of the final bpp allocation,
/// plus the largest relative gap across the run.
struct GeoArithReport {
  std::vector<MeanPair> per_frame;
  double max_relative_gap = 0.0;
};

GeoArithReport geomean_arithmean_report(const SequenceReport& report);

// Flat-file outputs consumed by scripts and by the `report` subcommand:
// summary.txt (key value lines), frames.csv, ctus.csv.
void write_run_outputs(const std::string& dir, const std::string& run_name,
                       const SequenceReport& report);

struct LoadedRun {
  std::vector<FrameLog> frames;
  double summary_rc_error = 0.0;
  double summary_target_bits = 0.0;
  long long summary_actual_bits = 0;
};

LoadedRun load_run_outputs(const std::string& dir,
                           const std::string& run_name);

}  // namespace rcgame

#endif
