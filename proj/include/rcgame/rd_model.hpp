#ifndef RCGAME_RD_MODEL_HPP
#define RCGAME_RD_MODEL_HPP

#include <stdexcept>

namespace rcgame {

/// Hyperbolic rate-distortion model parameters: d(r) = k * r^(-c).
/// Both parameters are strictly positive; after updates from coding
/// results they are clamped to the validity ranges below.
struct RdParams {
  double c = 0.367;
  double k = 8.72;
};

constexpr double kCMin = 0.03;
constexpr double kCMax = 20.0;
constexpr double kKMin = 1e-6;
constexpr double kKMax = 1e8;

/// Measured output of encoding one CTU.
struct CodingResult {
  double r_actual = 0.0;       // bits per pixel
  double lambda_actual = 0.0;  // Lagrange multiplier used
  double d_actual = 0.0;       // mean squared error per pixel
  long long bits_actual = 0;   // texture bits (0 only for skipped CTUs)
};

struct ParamUpdate {
  RdParams params;
  bool accepted = false;  // false: degenerate result, params unchanged
};

RdParams clamp_params(RdParams p);

/// d(r) = k * r^(-c). Throws std::domain_error for r <= 0.
double distortion_at_rate(const RdParams& p, double r);

/// lambda(r) = -d'(r) = c * k * r^(-c-1).
double lambda_at_rate(const RdParams& p, double r);

/// Inverse of lambda_at_rate: r = (lambda / (c*k))^(-1/(c+1)).
double rate_at_lambda(const RdParams& p, double lambda);

/// d(lambda) = (lambda * k^(1/c) / c)^(c/(c+1)).
double distortion_at_lambda(const RdParams& p, double lambda);

/// Refit (c, k) from an actual coding result:
///   c = r*lambda/d, k = d * r^c, then clamp to validity ranges.
/// A result with any non-positive field is rejected and `old` kept.
ParamUpdate update_params(const RdParams& old, const CodingResult& res);

}  // namespace rcgame

#endif
