#pragma once

// Support recovery and estimation accuracy of a fitted coefficient vector.

#include "kiqr/solver.hpp"

#include <vector>

namespace kiqr {

struct SelectionMetrics {
  Index tp = 0;
  Index fp = 0;
  Index fn = 0;
  double f1 = 0.0;
  double mse = 0.0;
  IndexSet excluded;
};

/// Compares slope vectors (intercept dropped, length d). Supports are the
/// exactly-nonzero entries outside `excluded`; mse averages the squared
/// error over the remaining coefficients.
SelectionMetrics selection_metrics(const Vector& beta_hat, const Vector& beta_true, const IndexSet& excluded = {});

/// 2 tp / (2 tp + fp + fn); 1 when both supports are empty.
double f1_score(Index tp, Index fp, Index fn);

/// Fraction of fits whose support contains `feature`.
double x1_selection_rate(const std::vector<FitResult>& fits, Index feature);
double x1_selection_rate(const std::vector<IndexSet>& supports, Index feature);

}  // namespace kiqr
