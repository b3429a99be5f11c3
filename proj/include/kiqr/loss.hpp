#pragma once

// Quantile check loss, its Huber-smoothed approximation, and the gradients
// the coordinate-descent solver consumes.

#include "kiqr/common.hpp"

#include <cmath>

namespace kiqr {

/// Quantile level, 0 < tau < 1.
template <typename Scalar>
class QuantileLevelT {
 public:
  explicit QuantileLevelT(Scalar tau) : tau_(tau) {
    if (!(tau > Scalar(0) && tau < Scalar(1))) throw Error("quantile level must lie in (0, 1)");
  }
  Scalar value() const { return tau_; }

 private:
  Scalar tau_;
};

/// Huber half-width gamma > 0.
template <typename Scalar>
class SmoothingParamT {
 public:
  explicit SmoothingParamT(Scalar gamma) : gamma_(gamma) {
    if (!(gamma > Scalar(0)) || !std::isfinite(gamma)) throw Error("smoothing parameter must be positive");
  }
  Scalar value() const { return gamma_; }

 private:
  Scalar gamma_;
};

using QuantileLevel = QuantileLevelT<double>;
using SmoothingParam = SmoothingParamT<double>;

inline constexpr double kDefaultGamma = 0.01;

/// rho_tau(u) = u (tau - I(u < 0)).
template <typename Scalar>
Scalar check_loss(Scalar u, QuantileLevelT<Scalar> tau) {
  return u >= Scalar(0) ? u * tau.value() : u * (tau.value() - Scalar(1));
}

/// Huber approximation of |u|: quadratic inside [-gamma, gamma], linear outside.
template <typename Scalar>
Scalar huber_abs(Scalar u, SmoothingParamT<Scalar> gamma) {
  const Scalar g = gamma.value();
  const Scalar a = std::abs(u);
  return a <= g ? u * u / (Scalar(2) * g) : a - g / Scalar(2);
}

template <typename Scalar>
Scalar huber_quantile_loss(Scalar u, QuantileLevelT<Scalar> tau, SmoothingParamT<Scalar> gamma) {
  return Scalar(0.5) * (huber_abs(u, gamma) + (Scalar(2) * tau.value() - Scalar(1)) * u);
}

/// d/du of huber_quantile_loss; bounded in [tau - 1, tau].
template <typename Scalar>
Scalar huber_quantile_grad(Scalar u, QuantileLevelT<Scalar> tau, SmoothingParamT<Scalar> gamma) {
  const Scalar g = gamma.value();
  const Scalar shift = tau.value() - Scalar(0.5);
  if (u > g) return Scalar(0.5) + shift;
  if (u < -g) return shift - Scalar(0.5);
  return u / (Scalar(2) * g) + shift;
}

/// Second derivative bound of huber_quantile_loss, 1 / (2 gamma).
template <typename Scalar>
Scalar huber_curvature_bound(SmoothingParamT<Scalar> gamma) {
  return Scalar(1) / (Scalar(2) * gamma.value());
}

struct LossAndGradient {
  double loss = 0.0;
  Vector gradient;  // length d + 1, intercept first
};

/// (1/n) sum_i h(y_i - x_i' beta) with beta = (intercept, coefficients).
double data_loss(const Vector& beta, const Matrix& X, const Vector& y, QuantileLevel tau,
                 SmoothingParam gamma);

/// Loss and its gradient -(1/n) sum_i x_ij H(y_i - x_i' beta), x_i0 = 1.
LossAndGradient data_loss_with_gradient(const Vector& beta, const Matrix& X, const Vector& y,
                                        QuantileLevel tau, SmoothingParam gamma);

/// Same structure as data_loss with y replaced by prior predictions.
inline double prior_loss(const Vector& beta, const Matrix& X, const Vector& prior_predictions,
                         QuantileLevel tau, SmoothingParam gamma) {
  return data_loss(beta, X, prior_predictions, tau, gamma);
}

inline LossAndGradient prior_loss_with_gradient(const Vector& beta, const Matrix& X,
                                                const Vector& prior_predictions, QuantileLevel tau,
                                                SmoothingParam gamma) {
  return data_loss_with_gradient(beta, X, prior_predictions, tau, gamma);
}

/// Sum (not mean) of exact check losses of y - X beta.
double check_loss_sum(const Vector& beta, const Matrix& X, const Vector& y, QuantileLevel tau);

/// Intercept-first linear predictor beta_0 + X beta_{1..d}.
Vector linear_predictor(const Vector& beta, const Matrix& X);

}  // namespace kiqr
