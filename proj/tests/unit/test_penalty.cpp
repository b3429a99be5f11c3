#include "kiqr/penalty.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace kiqr {
namespace {

// Numerical derivative of the integrated SCAD penalty as an oracle.
double scad_penalty(double b, double lambda, double a) {
  b = std::abs(b);
  if (b <= lambda) return lambda * b;
  if (b <= a * lambda) return (2 * a * lambda * b - b * b - lambda * lambda) / (2 * (a - 1));
  return lambda * lambda * (a + 1) / 2;
}

TEST(ScadParams, Validates) {
  EXPECT_THROW(ScadParams(-0.1), Error);
  EXPECT_THROW(ScadParams(0.1, 2.0), Error);
  EXPECT_NO_THROW(ScadParams(0.0));
}

TEST(ScadDerivative, Branches) {
  const ScadParams p(0.1);
  EXPECT_DOUBLE_EQ(scad_derivative(0.05, p), 0.1);
  EXPECT_NEAR(scad_derivative(0.2, p), 0.17 / 0.27 * 0.1, 1e-15);
  EXPECT_NEAR(scad_derivative(0.2, p), 0.0629630, 1e-7);
  EXPECT_EQ(scad_derivative(0.5, p), 0.0);
  EXPECT_EQ(scad_derivative(0.3, ScadParams(0.0)), 0.0);
  EXPECT_THROW(scad_derivative(-0.1, p), Error);
}

TEST(ScadDerivative, MatchesPenaltyFiniteDifference) {
  for (double lambda : {0.05, 0.1, 1.0})
    for (double a : {2.5, 3.7, 10.0})
      for (double b = 0.001; b < 5 * a * lambda; b += 0.0137 * lambda) {
        if (std::abs(b - lambda) < 1e-6 || std::abs(b - a * lambda) < 1e-6) continue;
        const double h = 1e-8;
        const double fd = (scad_penalty(b + h, lambda, a) - scad_penalty(b - h, lambda, a)) / (2 * h);
        EXPECT_NEAR(scad_derivative(b, ScadParams(lambda, a)), fd, 1e-6);
      }
}

TEST(ScadDerivative, NonIncreasingAndBounded) {
  const ScadParams p(0.3, 3.7);
  double prev = p.lambda;
  for (double b = 0.0; b < 2.0; b += 1e-3) {
    const double w = scad_derivative(b, p);
    EXPECT_LE(w, prev + 1e-15);
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, p.lambda);
    prev = w;
  }
}

TEST(LlaWeights, Examples) {
  const ScadParams p(0.1);
  EXPECT_TRUE((lla_weights(Vector::Zero(4), p).w.array() == 0.1).all());
  EXPECT_TRUE(lla_weights(Vector::Constant(3, -0.4), p).w.isZero(0.0));
  Vector beta(3);
  beta << 0.05, -0.2, 0.5;
  const PenaltyWeights w = lla_weights(beta, p);
  EXPECT_DOUBLE_EQ(w[0], 0.1);
  EXPECT_NEAR(w[1], 0.0629630, 1e-7);
  EXPECT_EQ(w[2], 0.0);
}

TEST(L1Weights, ConstantAndMasked) {
  const PenaltyWeights w = l1_weights(3, 0.1);
  EXPECT_EQ(w.size(), 3);
  EXPECT_TRUE((w.w.array() == 0.1).all());
  EXPECT_TRUE(l1_weights(4, 0.0).w.isZero(0.0));
  const PenaltyWeights masked = mask_weights(w, {0, 2});
  EXPECT_EQ(masked[0], 0.0);
  EXPECT_EQ(masked[1], 0.1);
  EXPECT_EQ(masked[2], 0.0);
  EXPECT_THROW(l1_weights(3, -1.0), Error);
  EXPECT_THROW(mask_weights(w, {3}), Error);
}

TEST(PenaltyWeights, RejectsNegativeOrNonFinite) {
  EXPECT_THROW(PenaltyWeights(Vector::Constant(2, -1.0)), Error);
  EXPECT_THROW(PenaltyWeights(Vector::Constant(2, INFINITY)), Error);
}

}  // namespace
}  // namespace kiqr
