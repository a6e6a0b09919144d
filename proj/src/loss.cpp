#include "cefe/loss.hpp"

#include <cmath>
#include <string>

#include "cefe/errors.hpp"

namespace cefe::model {

namespace {

constexpr double kProbFloor = 1e-12;

void check_target(const ProbDist& p, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= p.probs.size()) {
    throw CefeError(ErrorCode::Shape, "target class " + std::to_string(target) +
                                          " out of range for " +
                                          std::to_string(p.probs.size()) + " classes");
  }
}

}  // namespace

void SCEConfig::validate() const {
  if (mu < 0.0 || beta < 0.0) {
    throw CefeError(ErrorCode::Config, "SCE weights must be non-negative");
  }
  if (mu == 0.0 && beta == 0.0) {
    throw CefeError(ErrorCode::Config, "SCE weights mu and beta cannot both be zero");
  }
  if (!(clamp_a < 0.0)) {
    throw CefeError(ErrorCode::Config, "SCE log-zero clamp must be negative");
  }
}

double ce_loss(const ProbDist& p, int target) {
  check_target(p, target);
  double prob = p.probs[static_cast<std::size_t>(target)];
  return -std::log(prob < kProbFloor ? kProbFloor : prob);
}

double rce_loss(const ProbDist& p, int target, double clamp_a) {
  check_target(p, target);
  return -clamp_a * (1.0 - p.probs[static_cast<std::size_t>(target)]);
}

double sce_loss(const ProbDist& p, int target, const SCEConfig& cfg) {
  double total = cfg.mu * ce_loss(p, target);
  // beta = 0 must reduce to scaled CE exactly; skip rather than add 0 * rce.
  if (cfg.beta != 0.0) total += cfg.beta * rce_loss(p, target, cfg.clamp_a);
  return total;
}

}  // namespace cefe::model
