#pragma once

#include "cefe/types.hpp"

namespace cefe::model {

// Symmetric cross entropy configuration. mu weighs the CE term, beta the
// reverse-CE term; beta = 0 reduces the loss to plain cross entropy scaled
// by mu. clamp_a stands in for log 0 on one-hot targets.
struct SCEConfig {
  double mu = 0.1;
  double beta = 1.0;
  double clamp_a = -4.0;

  // mu >= 0, beta >= 0, not both zero, clamp_a < 0; CefeError(Config) otherwise.
  void validate() const;

  bool operator==(const SCEConfig&) const = default;
};

// -log p[target], probabilities floored at 1e-12.
double ce_loss(const ProbDist& p, int target);

// -sum_k p[k] log q[k] with one-hot q and log 0 := clamp_a; closed form
// -clamp_a * (1 - p[target]).
double rce_loss(const ProbDist& p, int target, double clamp_a = -4.0);

// mu * ce_loss + beta * rce_loss.
double sce_loss(const ProbDist& p, int target, const SCEConfig& cfg);

}  // namespace cefe::model
