#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "rcgame/metrics.hpp"
#include "rcgame/trace_io.hpp"

using namespace rcgame;

TEST_CASE("rc_error is a relative percentage") {
  CHECK(rc_error(1000.0, 1000.0) == doctest::Approx(0.0));
  CHECK(rc_error(1000.0, 990.0) == doctest::Approx(1.0));
  CHECK(rc_error(1000.0, 1010.0) == doctest::Approx(1.0));
  CHECK(rc_error(200.0, 100.0) == doctest::Approx(50.0));
  CHECK_THROWS_AS(rc_error(0.0, 10.0), std::domain_error);
}

TEST_CASE("psnr_proxy against the 8-bit peak") {
  CHECK(psnr_proxy(255.0 * 255.0) == doctest::Approx(0.0));
  CHECK(psnr_proxy(255.0 * 255.0 / 1000.0) == doctest::Approx(30.0));
  CHECK(psnr_proxy(1.0) == doctest::Approx(20.0 * std::log10(255.0)));
  CHECK_THROWS_AS(psnr_proxy(0.0), std::domain_error);
}

TEST_CASE("fluctuation_stats is the population variance") {
  const double flat[] = {5.0, 5.0, 5.0};
  auto s = fluctuation_stats(flat);
  CHECK(s.mean == doctest::Approx(5.0));
  CHECK(s.variance == doctest::Approx(0.0));

  const double pair[] = {0.0, 2.0};
  s = fluctuation_stats(pair);
  CHECK(s.mean == doctest::Approx(1.0));
  CHECK(s.variance == doctest::Approx(1.0));

  CHECK_THROWS_AS(fluctuation_stats(std::span<const double>{}),
                  std::domain_error);
}

TEST_CASE("compute_metrics and the geo/arith report") {
  SequenceReport report;
  report.target_total_bits = 2000.0;
  report.actual_total_bits = 1900;
  FrameLog f0;
  f0.frame = 0;
  f0.actual_bits = 1000;
  f0.mean_mse = 255.0 * 255.0;
  f0.geo_mean_bpp = 2.0;
  f0.arith_mean_bpp = 2.5;
  FrameLog f1 = f0;
  f1.frame = 1;
  f1.actual_bits = 900;
  f1.mean_mse = 255.0 * 255.0 / 1000.0;
  f1.geo_mean_bpp = 1.0;
  f1.arith_mean_bpp = 1.0;
  report.frames = {f0, f1};

  const auto m = compute_metrics(report);
  CHECK(m.rc_error_percent == doctest::Approx(5.0));
  CHECK(m.mean_psnr == doctest::Approx(15.0));
  CHECK(m.psnr_variance == doctest::Approx(225.0));
  CHECK(m.bits_mean == doctest::Approx(950.0));
  CHECK(m.bits_variance == doctest::Approx(2500.0));

  const auto g = geomean_arithmean_report(report);
  REQUIRE(g.per_frame.size() == 2u);
  CHECK(g.per_frame[0].geometric == doctest::Approx(2.0));
  CHECK(g.per_frame[0].arithmetic == doctest::Approx(2.5));
  CHECK(g.max_relative_gap == doctest::Approx(0.2));  // (2.5 - 2) / 2.5
}

TEST_CASE("trace round-trips through the text format") {
  TraceGenConfig cfg;
  cfg.name = "roundtrip";
  cfg.width = 256;
  cfg.height = 192;
  cfg.frame_count = 5;
  cfg.gop_size = 4;
  cfg.seed = 7;
  const auto trace = generate_trace(cfg);

  std::stringstream ss;
  save_trace(trace, ss);
  const auto back = load_trace(ss);

  CHECK(back.name == trace.name);
  CHECK(back.width == trace.width);
  CHECK(back.height == trace.height);
  CHECK(back.frame_count == trace.frame_count);
  CHECK(back.gop_size == trace.gop_size);
  CHECK(back.fps == trace.fps);
  CHECK(back.ref_bitrate == trace.ref_bitrate);
  CHECK(back.noise_seed == trace.noise_seed);
  CHECK(back.hierarchy == trace.hierarchy);
  REQUIRE(back.truth.size() == trace.truth.size());
  for (std::size_t i = 0; i < trace.truth.size(); ++i) {
    REQUIRE(back.truth[i].size() == trace.truth[i].size());
    for (std::size_t j = 0; j < trace.truth[i].size(); ++j) {
      CHECK(back.truth[i][j].c == trace.truth[i][j].c);  // bit exact
      CHECK(back.truth[i][j].k == trace.truth[i][j].k);
    }
  }

  SUBCASE("corrupted header is rejected") {
    std::stringstream bad("rctrace v2\n");
    CHECK_THROWS(load_trace(bad));
  }
}

TEST_CASE("run outputs round-trip through the flat files") {
  TraceGenConfig tcfg;
  tcfg.width = 256;
  tcfg.height = 192;
  tcfg.frame_count = 6;
  tcfg.seed = 13;
  const auto trace = generate_trace(tcfg);
  RunConfig rcfg;
  const auto report = run_sequence(trace, rcfg);

  const auto dir =
      (std::filesystem::temp_directory_path() / "rcgame_metrics_test").string();
  write_run_outputs(dir, "unit", report);
  const auto loaded = load_run_outputs(dir, "unit");

  CHECK(loaded.summary_target_bits ==
        doctest::Approx(report.target_total_bits));
  CHECK(loaded.summary_actual_bits == report.actual_total_bits);
  const auto m = compute_metrics(report);
  CHECK(loaded.summary_rc_error == doctest::Approx(m.rc_error_percent));
  REQUIRE(loaded.frames.size() == report.frames.size());
  for (std::size_t i = 0; i < report.frames.size(); ++i) {
    CHECK(loaded.frames[i].actual_bits == report.frames[i].actual_bits);
    CHECK(loaded.frames[i].level == report.frames[i].level);
    CHECK(loaded.frames[i].target_bits ==
          doctest::Approx(report.frames[i].target_bits));
    CHECK(std::isnan(loaded.frames[i].objective_game) ==
          std::isnan(report.frames[i].objective_game));
  }
  std::filesystem::remove_all(dir);
}
