#include "kiqr/solver.hpp"
#include "kiqr/tuning.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

namespace kiqr {
namespace {

using testing::gaussian_matrix;
using testing::gaussian_vector;
using testing::make_dataset;
using testing::sparse_linear;

bool trace_monotone(const FitResult& fit, double slack = 1e-10) {
  for (std::size_t k = 1; k < fit.objective_trace.size(); ++k)
    if (fit.objective_trace[k] > fit.objective_trace[k - 1] + slack) return false;
  return true;
}

// Unpenalized smoothed quantile regression by damped Newton with
// backtracking; an independent optimizer for small n > d problems.
Vector newton_smoothed_qr(const Matrix& X, const Vector& y, double tau, double gamma) {
  const Index n = X.rows();
  Matrix Z(n, X.cols() + 1);
  Z << Vector::Ones(n), X;
  const QuantileLevel t(tau);
  const SmoothingParam g(gamma);
  auto f = [&](const Vector& b) {
    const Vector r = y - Z * b;
    double s = 0.0;
    for (Index i = 0; i < n; ++i) s += huber_quantile_loss(r[i], t, g);
    return s / static_cast<double>(n);
  };
  Vector b = Vector::Zero(Z.cols());
  for (int it = 0; it < 500; ++it) {
    const Vector r = y - Z * b;
    Vector grad = Vector::Zero(Z.cols());
    Matrix hess = 1e-10 * Matrix::Identity(Z.cols(), Z.cols());
    for (Index i = 0; i < n; ++i) {
      grad -= Z.row(i).transpose() * huber_quantile_grad(r[i], t, g);
      if (std::abs(r[i]) <= gamma) hess += Z.row(i).transpose() * Z.row(i) / (2.0 * gamma);
    }
    grad /= static_cast<double>(n);
    hess /= static_cast<double>(n);
    if (grad.norm() < 1e-13) break;
    Vector step = hess.ldlt().solve(-grad);
    if (!step.allFinite() || step.dot(grad) >= 0) step = -grad;
    double a = 1.0;
    const double f0 = f(b);
    while (f(b + a * step) > f0 + 1e-4 * a * step.dot(grad) && a > 1e-12) a *= 0.5;
    b += a * step;
  }
  return b;
}

TEST(SoftThreshold, Identities) {
  CounterRng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double z = 10.0 * (rng.uniform() - 0.5);
    const double t = 3.0 * rng.uniform();
    EXPECT_EQ(soft_threshold(z, 0.0), z);
    if (std::abs(z) <= t) EXPECT_EQ(soft_threshold(z, t), 0.0);
    else EXPECT_NEAR(soft_threshold(z, t), z - std::copysign(t, z), 1e-15);
  }
}

TEST(CurvatureBound, Examples) {
  const Matrix X = Matrix::Ones(4, 1);
  const Vector D = curvature_bound(X, SmoothingParam(0.01));
  EXPECT_NEAR(D[0], 200.0, 1e-12);  // intercept column
  EXPECT_NEAR(D[1], 200.0, 1e-12);
  const Matrix Y = gaussian_matrix(100, 3, 2);
  const Vector D1 = curvature_bound(Y, SmoothingParam(0.01));
  const Vector D2 = curvature_bound(Y, SmoothingParam(0.02));
  EXPECT_NEAR(D1[0], 200.0, 1e-12);
  EXPECT_LE((D1 - 2.0 * D2).cwiseAbs().maxCoeff(), 1e-9);
  Matrix Z = gaussian_matrix(5, 2, 3);
  Z.col(1).setZero();
  EXPECT_THROW(curvature_bound(Z, SmoothingParam(0.01)), Error);
}

TEST(CoordinateDescent, InterceptOnlyFindsMedian) {
  const Matrix X(3, 0);
  Vector y(3);
  y << 1, 2, 9;
  const QuantileLevel tau(0.5);
  const SmoothingParam gamma(1e-4);
  const FitResult fit = coordinate_descent(X, y, tau, gamma, 0.0, nullptr, PenaltyWeights(Vector(0)), Vector::Zero(1));
  // Brute-force oracle over a fine 1-D grid.
  double best = 0.0;
  double best_val = INFINITY;
  for (double b = 0.0; b <= 10.0; b += 1e-4) {
    double v = 0.0;
    for (Index i = 0; i < 3; ++i) v += huber_quantile_loss(y[i] - b, tau, gamma);
    if (v < best_val) best_val = v, best = b;
  }
  EXPECT_NEAR(fit.beta[0], best, 1e-3);
  EXPECT_NEAR(fit.beta[0], 2.0, 1e-3);
}

TEST(CoordinateDescent, HugeWeightsGiveInterceptOnly) {
  const Dataset ds = sparse_linear(40, 5, 3, 1.0, 0.5, 4);
  const FitResult fit = coordinate_descent(ds, QuantileLevel(0.5), SmoothingParam(0.01), 0.0, nullptr,
                                           PenaltyWeights(Vector::Constant(5, 1e6)), Vector::Zero(6));
  EXPECT_TRUE(fit.beta.tail(5).isZero(0.0));
  EXPECT_TRUE(fit.support.empty());
  EXPECT_TRUE(fit.converged);
}

TEST(CoordinateDescent, MatchesGridSearchOnTwoFeatures) {
  const Dataset ds = sparse_linear(30, 2, 1, 1.0, 1.0, 5);
  const QuantileLevel tau(0.5);
  const SmoothingParam gamma(0.01);
  const PenaltyWeights w = l1_weights(2, 0.05);
  const FitResult fit = coordinate_descent(ds, tau, gamma, 0.0, nullptr, w, Vector::Zero(3));
  auto objective = [&](const Vector& b) { return surrogate_objective(ds.X, ds.y, tau, gamma, 0.0, nullptr, w, b); };
  // Coarse grid, then a fine grid around the coarse minimizer (the objective is convex).
  Vector best = Vector::Zero(3);
  double best_val = objective(best);
  Vector b(3);
  for (double b0 = -3; b0 <= 3; b0 += 0.05)
    for (double b1 = -3; b1 <= 3; b1 += 0.05)
      for (double b2 = -3; b2 <= 3; b2 += 0.05) {
        b << b0, b1, b2;
        const double v = objective(b);
        if (v < best_val) best_val = v, best = b;
      }
  const Vector center = best;
  for (double d0 = -0.05; d0 <= 0.05; d0 += 0.002)
    for (double d1 = -0.05; d1 <= 0.05; d1 += 0.002)
      for (double d2 = -0.05; d2 <= 0.05; d2 += 0.002) {
        b = center + Eigen::Vector3d(d0, d1, d2);
        const double v = objective(b);
        if (v < best_val) best_val = v, best = b;
      }
  EXPECT_LE(fit.objective(), best_val + 1e-3);
  EXPECT_NEAR(fit.objective(), objective(fit.beta), 1e-12);
}

TEST(CoordinateDescent, TraceIsMonotone) {
  const Dataset ds = sparse_linear(60, 150, 5, 1.0, 1.0, 6);
  const Vector preds = ds.X.leftCols(5).rowwise().sum();
  for (double zeta : {0.0, 0.3, 0.7}) {
    const FitResult fit = coordinate_descent(ds, QuantileLevel(0.7), SmoothingParam(0.01), zeta,
                                             zeta > 0 ? &preds : nullptr, l1_weights(150, 0.05), Vector::Zero(151));
    EXPECT_TRUE(trace_monotone(fit)) << "zeta " << zeta;
    EXPECT_TRUE(fit.converged);
  }
}

TEST(CoordinateDescent, PlainAndActiveSetAgree) {
  const Dataset ds = sparse_linear(50, 30, 3, 1.0, 1.0, 7);
  const PenaltyWeights w = l1_weights(30, 0.04);
  DescentOptions plain;
  plain.control.active_set = false;
  plain.control.max_sweeps = 200000;
  plain.control.tol = 1e-9;
  DescentOptions fast;
  fast.control.tol = 1e-9;
  const auto a = coordinate_descent(ds, QuantileLevel(0.5), SmoothingParam(0.01), 0.0, nullptr, w, Vector::Zero(31), plain);
  const auto b = coordinate_descent(ds, QuantileLevel(0.5), SmoothingParam(0.01), 0.0, nullptr, w, Vector::Zero(31), fast);
  EXPECT_TRUE(trace_monotone(a));
  EXPECT_NEAR(a.objective(), b.objective(), 1e-8);
}

TEST(CoordinateDescent, WarmStartAtSolutionIsFixedPoint) {
  const Dataset ds = sparse_linear(50, 40, 4, 1.0, 1.0, 8);
  const PenaltyWeights w = l1_weights(40, 0.03);
  const auto fit = coordinate_descent(ds, QuantileLevel(0.3), SmoothingParam(0.01), 0.0, nullptr, w, Vector::Zero(41));
  DescentOptions one;
  one.control.max_sweeps = 1;
  one.control.active_set = false;
  const auto again = coordinate_descent(ds, QuantileLevel(0.3), SmoothingParam(0.01), 0.0, nullptr, w, fit.beta, one);
  EXPECT_LE((again.beta - fit.beta).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_TRUE(again.converged);
}

TEST(CoordinateDescent, PinnedCoordinatesStay) {
  const Dataset ds = sparse_linear(40, 6, 3, 1.0, 0.5, 9);
  DescentOptions opts;
  opts.pinned = {0, 4};
  Vector start = Vector::Zero(7);
  start[5] = 0.25;
  const auto fit = coordinate_descent(ds, QuantileLevel(0.5), SmoothingParam(0.01), 0.0, nullptr, l1_weights(6, 0.01),
                                      start, opts);
  EXPECT_EQ(fit.beta[1], 0.0);
  EXPECT_EQ(fit.beta[5], 0.25);
}

TEST(CoordinateDescent, PriorPresenceMustMatchZeta) {
  const Dataset ds = sparse_linear(20, 3, 1, 1.0, 1.0, 10);
  const Vector preds = Vector::Zero(20);
  EXPECT_THROW(coordinate_descent(ds, QuantileLevel(0.5), SmoothingParam(0.01), 0.5, nullptr, l1_weights(3, 0.1),
                                  Vector::Zero(4)),
               Error);
  EXPECT_THROW(coordinate_descent(ds, QuantileLevel(0.5), SmoothingParam(0.01), 0.0, nullptr, l1_weights(2, 0.1),
                                  Vector::Zero(4)),
               Error);
}

TEST(CoordinateDescent, PermutationInvariantObjective) {
  const Dataset ds = sparse_linear(50, 20, 4, 1.0, 1.0, 11);
  std::vector<Index> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  const Dataset permuted = ds.subset_columns(perm);
  const PenaltyWeights w = l1_weights(20, 0.05);
  const auto a = coordinate_descent(ds, QuantileLevel(0.6), SmoothingParam(0.01), 0.0, nullptr, w, Vector::Zero(21));
  const auto b = coordinate_descent(permuted, QuantileLevel(0.6), SmoothingParam(0.01), 0.0, nullptr, w, Vector::Zero(21));
  EXPECT_NEAR(a.objective(), b.objective(), 1e-8);
  for (Index j = 0; j < 20; ++j) EXPECT_NEAR(a.beta[perm[static_cast<std::size_t>(j)] + 1], b.beta[j + 1], 1e-5);
}

TEST(FitLassoQr, AboveLambdaMaxIsEmpty) {
  const Dataset ds = sparse_linear(80, 100, 5, 1.0, 1.0, 12);
  const double lmax = lambda_max(ds, 0.5, 0.01, 0.0, nullptr);
  EXPECT_TRUE(fit_lasso_qr(ds, 0.5, 0.01, 1.001 * lmax).support.empty());
  EXPECT_FALSE(fit_lasso_qr(ds, 0.5, 0.01, 0.9 * lmax).support.empty());
}

TEST(FitLassoQr, UnpenalizedMatchesNewtonOracle) {
  const Dataset ds = sparse_linear(60, 3, 2, 1.0, 1.0, 13);
  for (double tau : {0.3, 0.5, 0.8}) {
    SolverControl control;
    control.tol = 1e-10;
    const FitResult fit = fit_lasso_qr(ds, tau, 0.05, 0.0, control);
    const Vector oracle = newton_smoothed_qr(ds.X, ds.y, tau, 0.05);
    EXPECT_LE((fit.beta - oracle).cwiseAbs().maxCoeff(), 1e-4) << "tau " << tau;
  }
}

TEST(FitLassoQr, RejectsNegativeLambda) {
  const Dataset ds = sparse_linear(20, 3, 1, 1.0, 1.0, 14);
  EXPECT_THROW(fit_lasso_qr(ds, 0.5, 0.01, -1.0), Error);
}

TEST(FitLassoQr, SupportShrinksAlongIncreasingLambda) {
  const Dataset ds = sparse_linear(100, 200, 5, 1.0, 1.0, 15);
  const double lmax = lambda_max(ds, 0.5, 0.01, 0.0, nullptr);
  std::size_t violations = 0;
  std::size_t prev = SIZE_MAX;
  for (double ratio : {0.05, 0.1, 0.2, 0.4, 0.8}) {
    const std::size_t s = fit_lasso_qr(ds, 0.5, 0.01, ratio * lmax).support.size();
    if (s > prev) ++violations;
    prev = s;
  }
  // Weak monotonicity is not guaranteed; only gross violations fail.
  EXPECT_LE(violations, 1u);
}

TEST(FitPriorInformed, EmptyPriorEqualsLassoPlusLla) {
  const Dataset ds = sparse_linear(60, 40, 4, 1.0, 1.0, 16);
  const FitResult a = fit_prior_informed(ds, 0.5, 0.01, 0.05, {}, 3);
  FitConfig config(0.5, 0.05, 0.0);
  const FitResult b = Problem(ds).kiqr(config, Vector::Zero(60));
  EXPECT_EQ(a.beta, b.beta);
}

TEST(FitPriorInformed, AllPriorNeedsMoreRowsThanFeatures) {
  const Dataset wide = sparse_linear(10, 12, 2, 1.0, 1.0, 17);
  IndexSet all(12);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_THROW(fit_prior_informed(wide, 0.5, 0.01, 0.1, all), Error);
  const Dataset tall = sparse_linear(50, 4, 2, 1.0, 1.0, 18);
  const FitResult fit = fit_prior_informed(tall, 0.5, 0.05, 10.0, {0, 1, 2, 3}, 1);
  SolverControl control;
  const FitResult free_fit = fit_lasso_qr(tall, 0.5, 0.05, 0.0, control);
  EXPECT_LE((fit.beta - free_fit.beta).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(FitPriorInformed, PriorCoefficientsSurvive) {
  const Dataset ds = sparse_linear(100, 80, 4, 1.5, 0.5, 19);
  const double lmax = lambda_max(ds, 0.5, 0.01, 0.0, nullptr);
  const FitResult fit = fit_prior_informed(ds, 0.5, 0.01, 0.5 * lmax, {0, 1, 2, 3});
  for (Index j = 0; j < 4; ++j) EXPECT_NE(fit.beta[j + 1], 0.0);
  EXPECT_THROW(fit_prior_informed(ds, 0.5, 0.01, 0.1, {80}), Error);
}

TEST(FitKiqr, ZetaZeroSinglePassIsLasso) {
  const Dataset ds = sparse_linear(60, 50, 4, 1.0, 1.0, 20);
  FitConfig config(0.5, 0.04, 0.0);
  config.lla_passes = 1;
  const FitResult a = fit_kiqr(ds, config, PriorPredictions{Vector::Zero(60)});
  const FitResult b = fit_lasso_qr(ds, 0.5, 0.01, 0.04);
  EXPECT_EQ(a.beta, b.beta);
  EXPECT_EQ(a.objective_trace, b.objective_trace);
}

TEST(FitKiqr, ZetaOneReproducesPriorPredictions) {
  const Dataset ds = sparse_linear(80, 5, 3, 1.0, 1.0, 21);
  Vector beta_p(6);
  beta_p << 0.5, 1.0, -1.0, 0.3, 0.0, 2.0;
  FitConfig config(0.5, 0.1, 1.0);
  config.tol = 1e-10;
  const FitResult fit = fit_kiqr(ds, config, PriorCoefficients{beta_p});
  const Vector diff = linear_predictor(fit.beta, ds.X) - linear_predictor(beta_p, ds.X);
  EXPECT_LE(diff.norm() / std::sqrt(80.0), 1e-3);
}

TEST(FitKiqr, PriorFormatsResolveConsistently) {
  const Dataset ds = sparse_linear(60, 30, 3, 1.0, 1.0, 22);
  Vector beta_p = Vector::Zero(31);
  beta_p.segment(1, 3).setOnes();
  const FitConfig config(0.5, 0.05, 0.4);
  const FitResult a = fit_kiqr(ds, config, PriorCoefficients{beta_p});
  const FitResult b = fit_kiqr(ds, config, PriorPredictions{linear_predictor(beta_p, ds.X)});
  EXPECT_LE((a.beta - b.beta).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(fit_kiqr(ds, config, PriorPredictions{Vector::Zero(59)}), Error);
  EXPECT_THROW(fit_kiqr(ds, config, PriorCoefficients{Vector::Zero(30)}), Error);
  EXPECT_THROW(fit_kiqr(ds, config, PriorSet{{30}}), Error);
}

TEST(FitKiqr, PerfectPriorRecoversSupport) {
  const Dataset ds = sparse_linear(150, 300, 5, 1.0, 0.5, 23);
  const double lmax = lambda_max(ds, 0.5, 0.01, 0.0, nullptr);
  const FitConfig config(0.5, 0.5 * lmax, 0.5);
  const FitResult fit = fit_kiqr(ds, config, PriorSet{{0, 1, 2, 3, 4}});
  EXPECT_EQ(fit.support, (IndexSet{0, 1, 2, 3, 4}));
}

TEST(FitKiqr, ValidatesConfig) {
  const Dataset ds = sparse_linear(20, 3, 1, 1.0, 1.0, 24);
  FitConfig config(0.5, 0.1, 1.5);
  EXPECT_THROW(fit_kiqr(ds, config, PriorPredictions{Vector::Zero(20)}), Error);
  config.zeta = 0.5;
  config.lla_passes = 0;
  EXPECT_THROW(fit_kiqr(ds, config, PriorPredictions{Vector::Zero(20)}), Error);
}

TEST(FitKiqr, ZetaOneWarnsInHighDimension) {
  const Dataset ds = sparse_linear(20, 30, 2, 1.0, 1.0, 25);
  std::vector<std::string> warnings;
  set_warning_handler([&](const std::string& m) { warnings.push_back(m); });
  const FitConfig config(0.5, 0.1, 1.0);
  fit_kiqr(ds, config, PriorPredictions{ds.y});
  set_warning_handler([](const std::string&) {});
  EXPECT_FALSE(warnings.empty());
}

TEST(FitOracle, EmptySupportIsInterceptOnly) {
  const Dataset ds = sparse_linear(31, 5, 2, 1.0, 1.0, 26);
  FitConfig config(0.5, 0.0, 0.0);
  config.gamma = SmoothingParam(1e-4);
  const FitResult fit = fit_oracle(ds, config, std::nullopt, {});
  EXPECT_TRUE(fit.beta.tail(5).isZero(0.0));
  std::vector<double> y(ds.y.data(), ds.y.data() + 31);
  std::nth_element(y.begin(), y.begin() + 15, y.end());
  EXPECT_NEAR(fit.beta[0], y[15], 1e-2);
}

TEST(FitOracle, BeatsLassoOnTrueSupport) {
  const Dataset ds = sparse_linear(120, 100, 4, 1.0, 0.5, 27);
  Vector truth = Vector::Zero(100);
  truth.head(4).setOnes();
  const FitConfig config(0.5, 0.0, 0.0);
  const FitResult oracle = fit_oracle(ds, config, std::nullopt, {0, 1, 2, 3});
  const double lmax = lambda_max(ds, 0.5, 0.01, 0.0, nullptr);
  const FitResult lasso = fit_lasso_qr(ds, 0.5, 0.01, 0.2 * lmax);
  EXPECT_LT((oracle.beta.tail(100) - truth).squaredNorm(), (lasso.beta.tail(100) - truth).squaredNorm());
  for (Index j = 4; j < 100; ++j) EXPECT_EQ(oracle.beta[j + 1], 0.0);
}

TEST(FitOracle, Errors) {
  const Dataset ds = sparse_linear(5, 10, 1, 1.0, 1.0, 28);
  const FitConfig config(0.5, 0.0, 0.0);
  EXPECT_THROW(fit_oracle(ds, config, std::nullopt, {0, 1, 2, 3, 4}), Error);
  const FitConfig with_prior(0.5, 0.0, 0.5);
  EXPECT_THROW(fit_oracle(ds, with_prior, std::nullopt, {0}), Error);
}

TEST(Problem, ConstantColumnStaysZero) {
  Dataset ds = sparse_linear(40, 5, 2, 1.0, 1.0, 29);
  ds.X.col(3).setConstant(2.5);
  const FitResult fit = fit_lasso_qr(ds, 0.5, 0.01, 0.0);
  EXPECT_EQ(fit.beta[4], 0.0);
}

TEST(Problem, OriginalScaleCoefficients) {
  // Rescaling a column rescales its coefficient inversely.
  const Dataset ds = sparse_linear(60, 4, 2, 1.0, 0.5, 30);
  Dataset scaled = ds;
  scaled.X.col(1) *= 10.0;
  const FitResult a = fit_lasso_qr(ds, 0.5, 0.01, 0.02);
  const FitResult b = fit_lasso_qr(scaled, 0.5, 0.01, 0.02);
  EXPECT_NEAR(a.beta[2], 10.0 * b.beta[2], 1e-6);
  EXPECT_NEAR(a.beta[0], b.beta[0], 1e-6);
}

}  // namespace
}  // namespace kiqr
