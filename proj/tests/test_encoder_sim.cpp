#include <cmath>

#include "doctest.h"
#include "rcgame/encoder_sim.hpp"

using namespace rcgame;

namespace {

TraceGenConfig small_cfg() {
  TraceGenConfig cfg;
  cfg.name = "unit";
  cfg.width = 384;
  cfg.height = 256;
  cfg.frame_count = 9;
  cfg.gop_size = 4;
  cfg.fps = 25.0;
  cfg.seed = 99;
  return cfg;
}

}  // namespace

TEST_CASE("generate_trace produces a well-formed ground truth") {
  const auto cfg = small_cfg();
  const auto trace = generate_trace(cfg);
  CHECK(trace.width == 384);
  CHECK(trace.frame_count == 9);
  CHECK(trace.ref_bitrate ==
        doctest::Approx(0.04 * 384 * 256 * 25.0));  // derived default

  // temporal layering: intra, then 3-2-3-1 inside each GOP of 4
  const std::vector<int> expect{0, 3, 2, 3, 1, 3, 2, 3, 1};
  CHECK(trace.hierarchy == expect);

  const auto geoms = partition_ctu_types(cfg.width, cfg.height);
  REQUIRE(trace.truth.size() == 9u);
  for (const auto& frame : trace.truth) {
    REQUIRE(frame.size() == geoms.size());
    for (const auto& p : frame) {
      CHECK(p.c >= 0.05);
      CHECK(p.c <= 5.0);
      CHECK(p.k >= 0.01);
      CHECK(p.k <= 1e6);
    }
  }

  SUBCASE("same seed, same trace") {
    const auto again = generate_trace(cfg);
    for (int i = 0; i < trace.frame_count; ++i) {
      for (std::size_t j = 0; j < trace.truth[i].size(); ++j) {
        CHECK(again.truth[i][j].c == trace.truth[i][j].c);
        CHECK(again.truth[i][j].k == trace.truth[i][j].k);
      }
    }
  }

  SUBCASE("k_trend drifts the field upward") {
    auto trended = cfg;
    trended.k_trend = 0.05;
    trended.sigma_params = 0.0;
    const auto t = generate_trace(trended);
    double first = 0.0;
    double last = 0.0;
    for (const auto& p : t.truth.front()) first += std::log(p.k);
    for (const auto& p : t.truth.back()) last += std::log(p.k);
    CHECK(last > first);
  }
}

TEST_CASE("encode_ctu without noise reproduces the model identities") {
  const RdParams truth{0.9, 40.0};
  AllocationDecision d;
  d.lambda = 300.0;
  NoiseModel noiseless{0.0, 0.0};
  std::mt19937_64 rng(1);

  const auto res = encode_ctu(truth, d, 16384, noiseless, rng);
  const double r = rate_at_lambda(truth, 300.0);
  CHECK(res.r_actual == doctest::Approx(r).epsilon(1e-12));
  CHECK(res.d_actual ==
        doctest::Approx(distortion_at_rate(truth, r)).epsilon(1e-12));
  CHECK(res.bits_actual == std::llround(r * 16384.0));
  CHECK(res.lambda_actual == doctest::Approx(300.0));

  d.lambda = 0.0;
  CHECK_THROWS_AS(encode_ctu(truth, d, 16384, noiseless, rng),
                  std::domain_error);
}

TEST_CASE("frame_target_schedule renormalizes weights per chunk") {
  auto trace = generate_trace(small_cfg());
  const double per_frame = 100000.0 / 25.0;
  const auto sched = frame_target_schedule(trace, 100000.0, 25.0);
  REQUIRE(sched.size() == 9u);

  // intra chunk is the single frame 0
  CHECK(sched[0] == doctest::Approx(per_frame));
  // each GOP chunk sums to gop_frames * bitrate / fps
  CHECK(sched[1] + sched[2] + sched[3] + sched[4] ==
        doctest::Approx(4.0 * per_frame));
  CHECK(sched[5] + sched[6] + sched[7] + sched[8] ==
        doctest::Approx(4.0 * per_frame));
  // within a chunk, budgets follow the level weights (levels 3,2,3,1)
  CHECK(sched[4] / sched[1] == doctest::Approx(0.6 / 0.25));
  CHECK(sched[2] / sched[1] == doctest::Approx(0.4 / 0.25));
  CHECK(frame_target_bits(trace, 100000.0, 25.0, 4) ==
        doctest::Approx(sched[4]));

  CHECK_THROWS_AS(frame_target_schedule(trace, 0.0, 25.0), std::domain_error);
}

TEST_CASE("run_sequence closes the loop") {
  const auto trace = generate_trace(small_cfg());
  RunConfig cfg;
  cfg.noise.sigma_bits = 0.0;

  const auto report = run_sequence(trace, cfg);
  const auto geoms = partition_ctu_types(trace.width, trace.height);
  REQUIRE(report.frames.size() == 9u);
  REQUIRE(report.ctus.size() == 9u * geoms.size());

  SUBCASE("bit accounting is conserved") {
    long long from_frames = 0;
    long long from_ctus = 0;
    for (const auto& f : report.frames) from_frames += f.actual_bits;
    for (const auto& c : report.ctus) from_ctus += c.actual_bits;
    CHECK(from_frames == report.actual_total_bits);
    CHECK(from_ctus == report.actual_total_bits);
    CHECK(report.target_total_bits ==
          doctest::Approx(trace.ref_bitrate / trace.fps * 9.0));
  }

  SUBCASE("noiseless control hits the total budget closely") {
    // Long enough to amortize the intra-frame miss; static ground truth
    // so the only error source is the controller itself.
    auto cfg2 = small_cfg();
    cfg2.frame_count = 33;
    cfg2.sigma_params = 0.0;
    const auto long_report = run_sequence(generate_trace(cfg2), cfg);
    const double err =
        std::fabs(long_report.target_total_bits -
                  static_cast<double>(long_report.actual_total_bits)) /
        long_report.target_total_bits;
    CHECK(err < 0.01);
  }

  SUBCASE("frame zero is intra, later frames are not") {
    CHECK(report.frames[0].intra);
    for (std::size_t i = 1; i < report.frames.size(); ++i) {
      CHECK_FALSE(report.frames[i].intra);
    }
    for (std::size_t j = 0; j < geoms.size(); ++j) {
      CHECK(report.ctus[j].source == DecisionSource::IntraProportional);
    }
  }

  SUBCASE("per-frame means are positive and ordered") {
    for (const auto& f : report.frames) {
      CHECK(f.mean_mse > 0.0);
      CHECK(f.geo_mean_bpp > 0.0);
      CHECK(f.arith_mean_bpp >= f.geo_mean_bpp - 1e-12);
    }
  }

  SUBCASE("identical configuration replays identically") {
    const auto again = run_sequence(trace, cfg);
    REQUIRE(again.ctus.size() == report.ctus.size());
    for (std::size_t j = 0; j < report.ctus.size(); ++j) {
      CHECK(again.ctus[j].actual_bits == report.ctus[j].actual_bits);
      CHECK(again.ctus[j].lambda == report.ctus[j].lambda);
    }
  }

  SUBCASE("noisy run still conserves and stays deterministic per seed") {
    RunConfig noisy;
    noisy.noise.sigma_bits = 0.1;
    const auto a = run_sequence(trace, noisy);
    const auto b = run_sequence(trace, noisy);
    CHECK(a.actual_total_bits == b.actual_total_bits);
    noisy.seed = 12345;
    const auto c = run_sequence(trace, noisy);
    CHECK(c.actual_total_bits != a.actual_total_bits);
  }
}
