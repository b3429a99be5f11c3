#pragma once

// Selection of (zeta, lambda): the quantile high-dimensional BIC and K-fold
// cross-validation with minimum / one-standard-error rules.

#include "kiqr/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kiqr {

enum class SelectionRule { minimum, one_se };
enum class Criterion { qbic, cv };

std::string to_string(SelectionRule rule);
std::string to_string(Criterion criterion);

struct TuningGrid {
  std::vector<double> zeta_values{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  /// Adds zeta = 1 (penalty vanishes) to the grid.
  bool include_zeta_one = false;
  /// Explicit per-zeta lambda paths (descending). When empty, each zeta gets
  /// a geometric path from lambda_max(zeta) down to lambda_min_ratio times it.
  std::vector<std::vector<double>> lambda_values;
  int n_lambda = 50;
  double lambda_min_ratio = 0.01;
  /// A lambda path stops once a fit selects more than this many features;
  /// the remaining cells are left unevaluated. 0 = no limit; kAutoSupport
  /// caps at n / 2, short of the near-interpolating fits QBIC rewards.
  static constexpr Index kAutoSupport = -1;
  Index max_support = kAutoSupport;
  int folds = 5;
  SelectionRule rule = SelectionRule::minimum;

  void validate() const;
  std::vector<double> zetas() const;
  /// Effective cap for a dataset with n rows; 0 = no limit.
  Index support_cap(Index n) const { return max_support == kAutoSupport ? n / 2 : max_support; }
};

/// Solver settings shared by every fit in a tuning run.
struct TuningSettings {
  double tau = 0.5;
  double gamma = kDefaultGamma;
  double scad_a = kDefaultScadA;
  int lla_passes = 3;
  SolverControl control{};

  FitConfig config(double zeta, double lambda) const;
};

struct TuningCell {
  double zeta = 0.0;
  double lambda = 0.0;
  double score = 0.0;     // +inf when failed or not evaluated
  double std_error = 0.0; // cross-validation only
  Index support_size = 0;
  bool evaluated = false;
  bool failed = false;
};

struct TuningResult {
  double best_zeta = 0.0;
  double best_lambda = 0.0;
  Criterion criterion = Criterion::qbic;
  SelectionRule rule = SelectionRule::minimum;
  std::vector<TuningCell> score_table;  // zeta-major, lambda descending
  FitResult best_fit;                   // refit on the full data at the chosen cell
  std::optional<Vector> prior_predictions;
};

/// log(sum rho_tau) + nu log(d) log(log n) / (2n); -inf when the sum is 0.
double qbic_value(double check_loss_sum, Index nu, Index n, Index d);

/// QBIC of a fit on its dataset; nu excludes the intercept, d counts the
/// candidate features of `ds`.
double qbic(const Dataset& ds, const FitResult& fit, double tau);

double lambda_max(const Dataset& ds, double tau, double gamma, double zeta, const Vector* prior_predictions);

/// Descending geometric path of `count` values from `top` to ratio * top.
std::vector<double> geometric_path(double top, double ratio, int count);

/// Resolves a prior to predictions for tuning: a prior set is fitted with
/// the prior-informed estimator tuned by QBIC over its own lambda path.
Vector resolve_prior_for_tuning(const Problem& problem, const TuningGrid& grid, const TuningSettings& settings,
                                const PriorKnowledge& prior);

/// QBIC tuning over the (zeta, lambda) grid. Without a prior only zeta = 0
/// is searched.
TuningResult tune_qbic(const Dataset& ds, const TuningGrid& grid, const TuningSettings& settings,
                       const std::optional<PriorKnowledge>& prior);

/// Prior-informed estimator (prior set unpenalized) tuned over lambda by QBIC.
TuningResult tune_prior_informed_qbic(const Dataset& ds, const TuningGrid& grid, const TuningSettings& settings,
                                      const IndexSet& prior_set);

/// Seeded fold labels in [0, folds): a seeded permutation dealt round-robin.
std::vector<int> fold_assignment(Index n, int folds, std::uint64_t seed);

TuningResult tune_cv(const Dataset& ds, const TuningGrid& grid, const TuningSettings& settings,
                     const std::optional<PriorKnowledge>& prior, std::uint64_t seed);

/// Cross-validation with caller-supplied fold labels.
TuningResult tune_cv_with_folds(const Dataset& ds, const TuningGrid& grid, const TuningSettings& settings,
                                const std::optional<PriorKnowledge>& prior, const std::vector<int>& folds);

}  // namespace kiqr
