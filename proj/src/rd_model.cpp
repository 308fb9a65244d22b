#include "rcgame/rd_model.hpp"

#include <algorithm>
#include <cmath>

namespace rcgame {

namespace {
void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::domain_error(std::string(what) + " must be positive and finite");
  }
}
}  // namespace

RdParams clamp_params(RdParams p) {
  p.c = std::clamp(p.c, kCMin, kCMax);
  p.k = std::clamp(p.k, kKMin, kKMax);
  return p;
}

double distortion_at_rate(const RdParams& p, double r) {
  require_positive(r, "rate");
  return p.k * std::pow(r, -p.c);
}

double lambda_at_rate(const RdParams& p, double r) {
  require_positive(r, "rate");
  return p.c * p.k * std::pow(r, -p.c - 1.0);
}

double rate_at_lambda(const RdParams& p, double lambda) {
  require_positive(lambda, "lambda");
  return std::pow(lambda / (p.c * p.k), -1.0 / (p.c + 1.0));
}

double distortion_at_lambda(const RdParams& p, double lambda) {
  require_positive(lambda, "lambda");
  return std::pow(lambda * std::pow(p.k, 1.0 / p.c) / p.c,
                  p.c / (p.c + 1.0));
}

ParamUpdate update_params(const RdParams& old, const CodingResult& res) {
  if (!(res.r_actual > 0.0) || !(res.lambda_actual > 0.0) ||
      !(res.d_actual > 0.0)) {
    return {old, false};
  }
  RdParams next;
  next.c = res.r_actual * res.lambda_actual / res.d_actual;
  next.k = res.d_actual * std::pow(res.r_actual, next.c);
  return {clamp_params(next), true};
}

}  // namespace rcgame
