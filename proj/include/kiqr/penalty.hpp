#pragma once

#include "kiqr/common.hpp"

#include <algorithm>

namespace kiqr {

inline constexpr double kDefaultScadA = 3.7;

template <typename Scalar>
struct ScadParamsT {
  Scalar lambda;
  Scalar a = Scalar(kDefaultScadA);

  ScadParamsT(Scalar lambda_, Scalar a_ = Scalar(kDefaultScadA)) : lambda(lambda_), a(a_) {
    if (!(lambda >= Scalar(0))) throw Error("SCAD lambda must be nonnegative");
    if (!(a > Scalar(2))) throw Error("SCAD a must exceed 2");
  }
};

using ScadParams = ScadParamsT<double>;

/// p'_lambda(|beta|) for SCAD: lambda on [0, lambda], linear decay to zero at a*lambda.
template <typename Scalar>
Scalar scad_derivative(Scalar beta_abs, const ScadParamsT<Scalar>& p) {
  if (beta_abs < Scalar(0)) throw Error("SCAD derivative needs a nonnegative argument");
  const Scalar lambda = p.lambda;
  if (lambda == Scalar(0)) return Scalar(0);
  if (beta_abs <= lambda) return lambda;
  const Scalar slack = std::max(p.a * lambda - beta_abs, Scalar(0));
  return slack / (p.a - Scalar(1));
}

/// Per-feature weights of the weighted-L1 surrogate; intercept excluded.
struct PenaltyWeights {
  Vector w;

  PenaltyWeights() = default;
  explicit PenaltyWeights(Vector weights);
  Index size() const { return w.size(); }
  double operator[](Index j) const { return w[j]; }
};

/// w_j = p'_lambda(|beta_init_j|); beta_init excludes the intercept.
PenaltyWeights lla_weights(const Vector& beta_init, const ScadParams& p);

PenaltyWeights l1_weights(Index d, double lambda);

/// Zeroes the weights of `unpenalized` features.
PenaltyWeights mask_weights(PenaltyWeights weights, const IndexSet& unpenalized);

}  // namespace kiqr
