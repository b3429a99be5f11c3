#include "kiqr/loss.hpp"

#include <string>

namespace kiqr {

namespace {

void check_dims(const Vector& beta, const Matrix& X, const Vector& y) {
  if (beta.size() != X.cols() + 1)
    throw Error("coefficient vector has length " + std::to_string(beta.size()) + ", expected " +
                std::to_string(X.cols() + 1));
  if (y.size() != X.rows())
    throw Error("response has length " + std::to_string(y.size()) + ", expected " +
                std::to_string(X.rows()));
}

}  // namespace

Vector linear_predictor(const Vector& beta, const Matrix& X) {
  if (beta.size() != X.cols() + 1) throw Error("coefficient vector does not match design width");
  Vector eta = Vector::Constant(X.rows(), beta[0]);
  for (Index j = 0; j < X.cols(); ++j) {
    const double b = beta[j + 1];
    if (b == 0.0) continue;
    for (Index i = 0; i < X.rows(); ++i) eta[i] += b * X(i, j);
  }
  return eta;
}

double data_loss(const Vector& beta, const Matrix& X, const Vector& y, QuantileLevel tau,
                 SmoothingParam gamma) {
  check_dims(beta, X, y);
  const Vector eta = linear_predictor(beta, X);
  double sum = 0.0;
  for (Index i = 0; i < y.size(); ++i) sum += huber_quantile_loss(y[i] - eta[i], tau, gamma);
  return y.size() > 0 ? sum / static_cast<double>(y.size()) : 0.0;
}

LossAndGradient data_loss_with_gradient(const Vector& beta, const Matrix& X, const Vector& y,
                                        QuantileLevel tau, SmoothingParam gamma) {
  check_dims(beta, X, y);
  const Index n = X.rows();
  const Vector eta = linear_predictor(beta, X);
  Vector h(n);
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double r = y[i] - eta[i];
    sum += huber_quantile_loss(r, tau, gamma);
    h[i] = huber_quantile_grad(r, tau, gamma);
  }
  LossAndGradient out;
  out.gradient = Vector::Zero(X.cols() + 1);
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss = sum * inv_n;
  double g0 = 0.0;
  for (Index i = 0; i < n; ++i) g0 += h[i];
  out.gradient[0] = -g0 * inv_n;
  for (Index j = 0; j < X.cols(); ++j) {
    double g = 0.0;
    for (Index i = 0; i < n; ++i) g += X(i, j) * h[i];
    out.gradient[j + 1] = -g * inv_n;
  }
  return out;
}

double check_loss_sum(const Vector& beta, const Matrix& X, const Vector& y, QuantileLevel tau) {
  check_dims(beta, X, y);
  const Vector eta = linear_predictor(beta, X);
  double sum = 0.0;
  for (Index i = 0; i < y.size(); ++i) sum += check_loss(y[i] - eta[i], tau);
  return sum;
}

}  // namespace kiqr
