#ifndef RCGAME_ALLOCATOR_HPP
#define RCGAME_ALLOCATOR_HPP

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "rcgame/nash_solver.hpp"
#include "rcgame/rd_model.hpp"

namespace rcgame {

constexpr int kLcuSize = 128;

// Lambda clipping constants.
constexpr double kNeighborClipRatio = 1.2599210498948732;   // 2^(1/3)
constexpr double kFrameClipRatio = 1.5874010519681994;      // 2^(2/3)
constexpr double kAbsoluteClipLo = 160.0;                   // 10 * 2^4
constexpr double kAbsoluteClipHi = 16000.0;                 // 1000 * 2^4
constexpr double kLambdaFloor = 0.1;

enum class CtuType { Full, RightEdge, BottomEdge, Corner };

/// Effective CTU geometry: frames whose dimensions are not multiples of
/// the LCU size produce narrower right-column and shorter bottom-row CTUs.
struct CtuGeometry {
  int index_j = 0;  // raster position
  int width = 0;
  int height = 0;
  CtuType type = CtuType::Full;
  long long pixels() const { return 1LL * width * height; }
};

/// Per-CTU controller state carried through a frame.
struct CtuRecord {
  CtuGeometry geom;
  RdParams params;
  double d_tilde = 0.0;  // co-located average distortion, 0 = no history
};

enum class DecisionSource { Nash, PlainLambdaFallback, IntraProportional };

struct AllocationDecision {
  double lambda = 0.0;
  double target_bpp = 0.0;
  long long target_bits = 0;
  DecisionSource source = DecisionSource::Nash;
};

/// Single-owner frame state machine; CTUs are committed strictly in
/// raster order because the remaining budget and the model parameters
/// feed each subsequent decision.
struct FrameContext {
  double remaining_bits = 0.0;
  std::vector<CtuRecord> ctus;
  std::size_t coded = 0;  // ctus[coded..] are uncoded, head first
  double frame_lambda_est = 0.0;  // 0 = absent
  double neighbor_lambda = 0.0;   // 0 = absent
  int hierarchy_level = 0;
  double q_hat = 0.0;  // estimated Q step of this frame
  double q = 0.0;      // Q step of previous frame at the same level
  bool overshoot = false;
  // Cached eta* for the once-per-frame solver mode.
  double cached_eta = 0.0;
  bool eta_cached = false;

  std::span<const CtuRecord> uncoded() const {
    return {ctus.data() + coded, ctus.size() - coded};
  }
  double delta() const { return (q_hat > 0.0 && q > 0.0) ? q_hat / q : 1.0; }
};

struct AllocatorConfig {
  double varsigma = 0.7;
  // Tighter than the solver's 0.001 default so the geometric budget identity
  // holds to float precision on every solve; costs 2-3 extra iterations.
  NewtonConfig solver{0.0, 1e-9, 100};
  bool eta_once_per_frame = false;
  // Equal-bpp comparison allocator: skips the bargaining solve and uses
  // the plain lambda-domain path for every CTU.
  bool proportional_baseline = false;
  long long min_bits_pixels_per_bit = 64;  // floor: 1 bit per 64 pixels
};

std::vector<CtuGeometry> partition_ctu_types(int frame_width, int frame_height,
                                             int lcu = kLcuSize);

/// Remaining budget split by CTU type, proportional to uncoded pixels.
std::map<CtuType, double> type_budget(const FrameContext& ctx);

/// S = varsigma * R^pi / sum_b M_b * (k_b / d~_b)^(1/c_b) over uncoded
/// CTUs of the same type as `ctu`. The denominator is the bit cost for
/// each of them to reach its historical average distortion.
double scale_factor(const FrameContext& ctx, const CtuRecord& ctu,
                    double varsigma);

/// u0 = min(S, 1) / (delta * d~).
double min_utility(const CtuRecord& ctu, double scale, double delta);

/// Clip order: neighbor band, then frame band (or the absolute band when
/// no frame estimate exists), then the 0.1 floor.
double clip_lambda(double lambda_raw, double lambda_nei, double lambda_est);

/// Sliding-window smoothing: floor(M*r - (sum M_j r_j - R)/W + 0.5),
/// W = min(4, N), clamped below by min_bits.
long long refine_bits(double remaining_bits,
                      std::span<const long long> uncoded_pixels,
                      std::span<const double> estimated_bpps,
                      long long head_pixels, double head_bpp,
                      long long min_bits);

/// Minimal utilities for all uncoded CTUs (scale factor and u0 combined).
/// Requires positive distortion history everywhere.
std::vector<double> compute_min_utilities(const FrameContext& ctx,
                                          double varsigma);

/// One allocation step for the head uncoded CTU of an inter frame.
AllocationDecision allocate_next_ctu(FrameContext& ctx,
                                     const AllocatorConfig& cfg);

/// Commit actual coding results for the head CTU: budget bookkeeping,
/// parameter refit, neighbor-lambda advance.
void commit_actual(FrameContext& ctx, const CodingResult& res);

/// Intra frames: proportional-to-pixels split, lambda from the model at
/// the implied bpp.
std::vector<AllocationDecision> allocate_intra_frame(const FrameContext& ctx,
                                                     const AllocatorConfig& cfg);

/// Frame-level lambda estimate: band anchor chosen so the equal-bpp
/// per-CTU lambdas, clipped to +-2^(2/3) around it, jointly spend the
/// remaining budget (bisection solve).
double estimate_frame_lambda(const FrameContext& ctx);

// Standard lambda-Qp coupling: Qp = a*ln(lambda) + b, Qstep = 2^((Qp-4)/6).
double qp_from_lambda(double lambda);
double qstep_from_lambda(double lambda);

}  // namespace rcgame

#endif
