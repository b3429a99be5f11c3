#pragma once

// Cyclic coordinate descent on the Huber-smoothed, LLA-linearized KIQR
// objective
//
//   (1 - zeta) h(beta) + zeta h^p(beta) + (1 - zeta) sum_j w_j |beta_j|
//
// and the estimators built on it: quantile LASSO, the prior-informed fit
// (prior features unpenalized), the two-step KIQR fit and the restricted
// support oracle fit.

#include "kiqr/dataset.hpp"
#include "kiqr/loss.hpp"
#include "kiqr/penalty.hpp"

#include <optional>
#include <variant>

namespace kiqr {

struct SolverControl {
  double tol = 1e-7;      // max |delta beta_j| over a full sweep, standardized scale
  int max_sweeps = 10000;
  bool active_set = true;
};

struct FitConfig {
  QuantileLevel tau{0.5};
  double zeta = 0.0;
  ScadParams scad{0.0};
  SmoothingParam gamma{kDefaultGamma};
  double tol = 1e-7;
  int max_sweeps = 10000;
  /// Total passes including the initial quantile-LASSO fit; pass k >= 2
  /// refits with SCAD-LLA weights taken from pass k - 1.
  int lla_passes = 3;

  FitConfig() = default;
  FitConfig(double tau_, double lambda, double zeta_ = 0.0);

  void validate() const;
  SolverControl control() const { return {tol, max_sweeps, true}; }
};

struct PriorSet {
  IndexSet features;
};
struct PriorCoefficients {
  Vector beta;  // original scale, intercept first
};
struct PriorPredictions {
  Vector values;  // one per observation
};

/// Exactly one knowledge format; every one resolves to a prediction vector.
using PriorKnowledge = std::variant<PriorSet, PriorCoefficients, PriorPredictions>;

struct FitResult {
  Vector beta;               // original scale, intercept first
  Vector beta_standardized;  // standardized design scale, intercept first
  IndexSet support;          // feature columns with beta != 0
  std::vector<double> objective_trace;
  int sweeps_used = 0;
  bool converged = false;

  double objective() const { return objective_trace.empty() ? 0.0 : objective_trace.back(); }
};

IndexSet support_of(const Vector& beta);

/// SoftThreshold(z, t) = sign(z) max(|z| - t, 0).
inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

/// D_j = 2 / (n gamma) [X'X]_jj for the design with a leading intercept
/// column; throws if a column is identically zero.
Vector curvature_bound(const Matrix& X, SmoothingParam gamma);

struct DescentOptions {
  SolverControl control{};
  /// Coordinates held at their starting value (feature columns, 0-based).
  IndexSet pinned;
};

/// Surrogate objective value at beta on the data as given.
double surrogate_objective(const Matrix& X, const Vector& y, QuantileLevel tau, SmoothingParam gamma,
                           double zeta, const Vector* prior_predictions, const PenaltyWeights& weights,
                           const Vector& beta);

/// Raw engine on the data exactly as given (no standardization). Updates
/// coordinate 0 (intercept, unpenalized) and then features in ascending
/// order with the proximal step
///   beta_j <- S(beta_j - grad_j / D_j, (1 - zeta) w_j / D_j).
/// Returned beta and beta_standardized both refer to this data's scale.
FitResult coordinate_descent(const Matrix& X, const Vector& y, QuantileLevel tau, SmoothingParam gamma,
                             double zeta, const Vector* prior_predictions, const PenaltyWeights& weights,
                             const Vector& beta_start, const DescentOptions& options = {});

inline FitResult coordinate_descent(const Dataset& ds, QuantileLevel tau, SmoothingParam gamma, double zeta,
                                    const Vector* prior_predictions, const PenaltyWeights& weights,
                                    const Vector& beta_start, const DescentOptions& options = {}) {
  return coordinate_descent(ds.X, ds.y, tau, gamma, zeta, prior_predictions, weights, beta_start, options);
}

/// A dataset standardized once and reused across many fits (grids, paths,
/// folds). Penalization acts on standardized coefficients; results are
/// reported on the original scale. Constant columns stay pinned at zero.
class Problem {
 public:
  explicit Problem(const Dataset& ds);

  const Dataset& original() const { return original_; }
  const Dataset& standardized() const { return standardized_; }
  const Standardization& standardization() const { return standardization_; }
  Index n() const { return original_.n(); }
  Index d() const { return original_.d(); }

  /// One coordinate-descent run on the standardized design. `beta_start`
  /// is on the standardized scale; absent means zero slopes with the
  /// intercept at the sample tau-quantile of y.
  FitResult descend(QuantileLevel tau, SmoothingParam gamma, double zeta, const Vector* prior_predictions,
                    const PenaltyWeights& weights, const Vector* beta_start, const SolverControl& control,
                    const IndexSet& extra_pinned = {}) const;

  /// Quantile LASSO (zeta = 0, constant L1 weights).
  FitResult lasso(QuantileLevel tau, SmoothingParam gamma, double lambda, const SolverControl& control,
                  const Vector* beta_start = nullptr) const;

  /// LLA refits after an initial fit; passes - 1 rounds. Features in
  /// `unpenalized` keep weight 0 throughout.
  FitResult lla_refits(const FitResult& initial, QuantileLevel tau, SmoothingParam gamma, double zeta,
                       const Vector* prior_predictions, const ScadParams& scad, int passes,
                       const SolverControl& control, const IndexSet& unpenalized = {}) const;

  FitResult prior_informed(QuantileLevel tau, SmoothingParam gamma, const ScadParams& scad,
                           const IndexSet& prior_set, int passes, const SolverControl& control,
                           const Vector* beta_start = nullptr) const;

  /// Resolves any knowledge format to a prior prediction vector. A prior
  /// set is fitted with prior_informed at the configuration's lambda.
  Vector prior_predictions(const FitConfig& config, const PriorKnowledge& prior) const;

  FitResult kiqr(const FitConfig& config, const Vector& prior_predictions) const;

  FitResult oracle(const FitConfig& config, const Vector* prior_predictions, const IndexSet& support) const;

  /// max_j |(1 - zeta) grad_j h + zeta grad_j h^p| / (1 - zeta) at the
  /// intercept-only solution, on the standardized scale.
  double lambda_max(QuantileLevel tau, SmoothingParam gamma, double zeta, const Vector* prior_predictions,
                    const SolverControl& control = {}) const;

  /// Linear predictor of original-scale coefficients on the original design.
  Vector predict(const Vector& beta) const;

 private:
  FitResult finish(FitResult raw, double shift) const;

  Dataset original_;
  Dataset standardized_;
  Standardization standardization_;
  IndexSet constant_;
};

FitResult fit_lasso_qr(const Dataset& ds, double tau, double gamma, double lambda, const SolverControl& control = {});

/// Quantile regression with prior-set features unpenalized, followed by
/// the same number of LLA passes as the KIQR fit.
FitResult fit_prior_informed(const Dataset& ds, double tau, double gamma, double lambda, const IndexSet& prior_set,
                             int lla_passes = 3, const SolverControl& control = {});

FitResult fit_kiqr(const Dataset& ds, const FitConfig& config, const PriorKnowledge& prior);

/// Unpenalized minimizer of (1 - zeta) h + zeta h^p over coefficients
/// supported on `support`; a missing prior requires zeta = 0.
FitResult fit_oracle(const Dataset& ds, const FitConfig& config, const std::optional<PriorKnowledge>& prior,
                     const IndexSet& support);

}  // namespace kiqr
