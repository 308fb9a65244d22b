// Command-line harness: trace generation, closed-loop runs, allocator
// comparison, varsigma sweeps and log re-analysis.

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rcgame/encoder_sim.hpp"
#include "rcgame/metrics.hpp"
#include "rcgame/trace_io.hpp"

using namespace rcgame;

namespace {

struct RunOptions {
  std::string trace_path;
  std::string out_dir = "out";
  std::string allocator = "nash";
  double bitrate = 0.0;
  double fps = 0.0;
  double varsigma = 0.7;
  double sigma_bits = 0.1;
  std::uint64_t seed = 0;
  bool eta_once = false;
};

void add_run_flags(CLI::App* cmd, RunOptions& opt) {
  cmd->add_option("--trace", opt.trace_path, "trace file")->required();
  cmd->add_option("--bitrate", opt.bitrate,
                  "target bitrate in bits/s (default: trace reference)");
  cmd->add_option("--fps", opt.fps, "frame rate (default: trace value)");
  cmd->add_option("--allocator", opt.allocator, "nash or proportional")
      ->check(CLI::IsMember({"nash", "proportional"}));
  cmd->add_option("--varsigma", opt.varsigma, "minimal-utility scale in (0, 1]")
      ->check(CLI::Range(1e-6, 1.0));
  cmd->add_option("--sigma-bits", opt.sigma_bits,
                  "lognormal bits noise sigma (0 disables)");
  cmd->add_option("--seed", opt.seed, "noise seed (default: trace seed)");
  cmd->add_option("--out-dir", opt.out_dir, "output directory");
  cmd->add_flag("--eta-once-per-frame", opt.eta_once,
                "solve the eta equation once per frame instead of per CTU");
}

RunConfig to_run_config(const RunOptions& opt) {
  RunConfig cfg;
  cfg.alloc.varsigma = opt.varsigma;
  cfg.alloc.eta_once_per_frame = opt.eta_once;
  cfg.alloc.proportional_baseline = opt.allocator == "proportional";
  cfg.noise.sigma_bits = opt.sigma_bits;
  cfg.bitrate = opt.bitrate;
  cfg.fps = opt.fps;
  cfg.seed = opt.seed;
  return cfg;
}

// Invariants every completed run must satisfy; violations are fatal.
int check_run_invariants(const SequenceReport& report) {
  int violations = 0;
  long long frame_bits = 0;
  long long ctu_bits = 0;
  for (const auto& f : report.frames) {
    frame_bits += f.actual_bits;
    if (f.geo_mean_bpp > f.arith_mean_bpp * (1.0 + 1e-12)) {
      std::fprintf(stderr,
                   "invariant violation: frame %d geometric mean %.17g above "
                   "arithmetic mean %.17g\n",
                   f.frame, f.geo_mean_bpp, f.arith_mean_bpp);
      ++violations;
    }
    if (!std::isnan(f.objective_game) &&
        f.objective_game + 1e-9 < f.objective_baseline) {
      std::fprintf(stderr,
                   "invariant violation: frame %d bargaining objective %.17g "
                   "below the equal-split baseline %.17g\n",
                   f.frame, f.objective_game, f.objective_baseline);
      ++violations;
    }
  }
  for (const auto& c : report.ctus) ctu_bits += c.actual_bits;
  if (frame_bits != report.actual_total_bits ||
      ctu_bits != report.actual_total_bits) {
    std::fprintf(stderr, "invariant violation: bit totals disagree\n");
    ++violations;
  }
  return violations;
}

void print_metrics(const std::string& tag, const RunMetrics& m) {
  std::printf("%-24s rc_error %.4f%%  psnr %.3f dB  psnr_var %.4f  "
              "bits_mean %.0f  bits_var %.3e\n",
              tag.c_str(), m.rc_error_percent, m.mean_psnr, m.psnr_variance,
              m.bits_mean, m.bits_variance);
}

int cmd_gen_trace(const TraceGenConfig& cfg, const std::string& out_path) {
  const auto trace = generate_trace(cfg);
  save_trace_file(trace, out_path);
  std::printf("wrote %s: %dx%d, %d frames, gop %d, ref bitrate %.0f b/s\n",
              out_path.c_str(), trace.width, trace.height, trace.frame_count,
              trace.gop_size, trace.ref_bitrate);
  return 0;
}

int cmd_run(const RunOptions& opt) {
  const auto trace = load_trace_file(opt.trace_path);
  const auto report = run_sequence(trace, to_run_config(opt));
  const std::string name = trace.name + "." + opt.allocator;
  write_run_outputs(opt.out_dir, name, report);
  print_metrics(name, compute_metrics(report));
  std::printf("logs: %s/%s.{summary.txt,frames.csv,ctus.csv}\n",
              opt.out_dir.c_str(), name.c_str());
  return check_run_invariants(report) == 0 ? 0 : 1;
}

int cmd_compare(const RunOptions& opt, std::vector<double> multipliers) {
  const auto trace = load_trace_file(opt.trace_path);
  if (multipliers.empty()) multipliers = {0.5, 1.0, 2.0, 4.0};
  const double ref = opt.bitrate > 0.0 ? opt.bitrate : trace.ref_bitrate;

  int violations = 0;
  for (double mult : multipliers) {
    for (const char* alloc : {"nash", "proportional"}) {
      RunOptions local = opt;
      local.allocator = alloc;
      local.bitrate = ref * mult;
      const auto report = run_sequence(trace, to_run_config(local));
      char tag[128];
      std::snprintf(tag, sizeof tag, "%.2gx/%s", mult, alloc);
      write_run_outputs(opt.out_dir,
                        trace.name + "." + std::to_string(mult) + "." + alloc,
                        report);
      print_metrics(tag, compute_metrics(report));
      violations += check_run_invariants(report);
    }
  }
  return violations == 0 ? 0 : 1;
}

int cmd_sweep(const RunOptions& opt, std::vector<double> grid) {
  const auto trace = load_trace_file(opt.trace_path);
  if (grid.empty()) grid = {0.1, 0.3, 0.5, 0.7, 0.9};
  int violations = 0;
  std::printf("varsigma   rc_error%%   mean_psnr   psnr_var    bits_var\n");
  for (double v : grid) {
    RunOptions local = opt;
    local.varsigma = v;
    const auto report = run_sequence(trace, to_run_config(local));
    const auto m = compute_metrics(report);
    std::printf("%8.2f   %9.4f   %9.3f   %8.4f   %.3e\n", v,
                m.rc_error_percent, m.mean_psnr, m.psnr_variance,
                m.bits_variance);
    char name[64];
    std::snprintf(name, sizeof name, "varsigma_%.2f", v);
    write_run_outputs(opt.out_dir, trace.name + "." + name, report);
    violations += check_run_invariants(report);
  }
  return violations == 0 ? 0 : 1;
}

int cmd_report(const std::string& out_dir, const std::string& run_name) {
  const auto run = load_run_outputs(out_dir, run_name);
  double target = 0.0;
  long long actual = 0;
  for (const auto& f : run.frames) {
    target += f.target_bits;
    actual += f.actual_bits;
  }
  const double recomputed = rc_error(run.summary_target_bits,
                                     static_cast<double>(actual));
  std::printf("run %s: %zu frames, summary rc_error %.4f%%, recomputed "
              "%.4f%%\n",
              run_name.c_str(), run.frames.size(), run.summary_rc_error,
              recomputed);
  if (actual != run.summary_actual_bits ||
      std::fabs(recomputed - run.summary_rc_error) > 1e-6) {
    std::fprintf(stderr,
                 "invariant violation: summary disagrees with per-frame logs\n");
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Game-theoretic CTU-level rate control over a virtual encoder"};
  app.require_subcommand(1);

  TraceGenConfig gen;
  std::string gen_out = "trace.txt";
  auto* gen_cmd = app.add_subcommand("gen-trace", "write a synthetic trace");
  gen_cmd->add_option("--out", gen_out, "output path")->required();
  gen_cmd->add_option("--name", gen.name, "trace name");
  gen_cmd->add_option("--width", gen.width, "frame width");
  gen_cmd->add_option("--height", gen.height, "frame height");
  gen_cmd->add_option("--frames", gen.frame_count, "frame count");
  gen_cmd->add_option("--gop", gen.gop_size, "GOP size");
  gen_cmd->add_option("--fps", gen.fps, "frame rate");
  gen_cmd->add_option("--bitrate", gen.ref_bitrate,
                      "reference bitrate (0: derived from 0.04 bpp)");
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("--sigma-params", gen.sigma_params,
                      "frame-to-frame parameter drift");
  gen_cmd->add_option("--trend", gen.k_trend,
                      "deterministic ln(k) drift per frame");
  gen_cmd->add_option("--trend-frames", gen.trend_frames,
                      "frames the trend applies to (0: all)");
  gen_cmd->add_option("--c-bias", gen.c_bias, "shift of the ln(c) field mean");

  RunOptions run_opt;
  auto* run_cmd = app.add_subcommand("run", "single closed-loop run");
  add_run_flags(run_cmd, run_opt);

  RunOptions cmp_opt;
  std::vector<double> multipliers;
  auto* cmp_cmd =
      app.add_subcommand("compare", "game vs proportional across rate points");
  add_run_flags(cmp_cmd, cmp_opt);
  cmp_cmd->add_option("--rate-multipliers", multipliers,
                      "rate points as multiples of the reference bitrate");

  RunOptions sweep_opt;
  std::vector<double> grid;
  auto* sweep_cmd = app.add_subcommand("sweep", "varsigma grid sweep");
  add_run_flags(sweep_cmd, sweep_opt);
  sweep_cmd->add_option("--varsigma-grid", grid, "varsigma values to sweep");

  std::string rep_dir = "out";
  std::string rep_name;
  auto* rep_cmd = app.add_subcommand("report", "recompute metrics from logs");
  rep_cmd->add_option("--out-dir", rep_dir, "directory holding the logs");
  rep_cmd->add_option("--run", rep_name, "run name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) return cmd_gen_trace(gen, gen_out);
    if (run_cmd->parsed()) return cmd_run(run_opt);
    if (cmp_cmd->parsed()) return cmd_compare(cmp_opt, multipliers);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_opt, grid);
    if (rep_cmd->parsed()) return cmd_report(rep_dir, rep_name);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
