#include "kiqr/penalty.hpp"

#include <cmath>

namespace kiqr {

PenaltyWeights::PenaltyWeights(Vector weights) : w(std::move(weights)) {
  for (Index j = 0; j < w.size(); ++j)
    if (!(w[j] >= 0.0) || !std::isfinite(w[j])) throw Error("penalty weights must be finite and nonnegative");
}

PenaltyWeights lla_weights(const Vector& beta_init, const ScadParams& p) {
  Vector w(beta_init.size());
  for (Index j = 0; j < beta_init.size(); ++j) w[j] = scad_derivative(std::abs(beta_init[j]), p);
  return PenaltyWeights(std::move(w));
}

PenaltyWeights l1_weights(Index d, double lambda) {
  if (!(lambda >= 0.0)) throw Error("lambda must be nonnegative");
  return PenaltyWeights(Vector::Constant(d, lambda));
}

PenaltyWeights mask_weights(PenaltyWeights weights, const IndexSet& unpenalized) {
  for (Index j : unpenalized) {
    if (j < 0 || j >= weights.size()) throw Error("unpenalized index out of range");
    weights.w[j] = 0.0;
  }
  return weights;
}

}  // namespace kiqr
