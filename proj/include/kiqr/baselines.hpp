#pragma once

// Marginal per-feature association tests: least squares with a t-test and
// smoothed quantile regression with a Wald test, plus the genome-wide scan
// built on them.

#include "kiqr/dataset.hpp"
#include "kiqr/loss.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace kiqr {

inline constexpr double kPValueFloor = 1e-300;
inline constexpr double kGenomeWideThreshold = 5e-8;

struct MarginalTestResult {
  Index feature = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  double p_value = 1.0;
  bool degenerate = false;  // rank-deficient design or vanishing density
};

/// Least squares of y on [1, x_feature, covariates]; two-sided t-test.
MarginalTestResult marginal_ols_pvalue(const Dataset& ds, Index feature, const IndexSet& covariates);

/// Unpenalized smoothed quantile regression of y on [1, x_feature,
/// covariates]; Wald test with sandwich-free covariance
/// tau (1 - tau) (X'X)^-1 / f(0)^2, f(0) a Hall-Sheather kernel estimate.
MarginalTestResult marginal_qr_pvalue(const Dataset& ds, Index feature, const IndexSet& covariates, double tau,
                                      double gamma = kDefaultGamma);

/// Residual density at zero: Powell's uniform kernel with the Hall-Sheather
/// bandwidth, scaled by min(sd, IQR / 1.34) of the residuals.
double sparsity_density(const Vector& residuals, double tau);

struct GwasMethod {
  enum class Kind { ols, qr } kind = Kind::ols;
  double tau = 0.5;

  static GwasMethod ols() { return {Kind::ols, 0.5}; }
  static GwasMethod qr(double tau) { return {Kind::qr, tau}; }
};

std::string to_string(const GwasMethod& method);

struct GwasScan {
  std::vector<MarginalTestResult> results;  // one per non-covariate feature, column order
  IndexSet selected;                        // p_value < threshold
};

GwasScan gwas_scan(const Dataset& ds, const IndexSet& covariates, const GwasMethod& method,
                   double threshold = kGenomeWideThreshold);

/// Manhattan-ready CSV: feature,chromosome,position,estimate,p_value,neg_log10_p,selected
/// (chromosome and position empty without feature metadata). `highlight`
/// adds a trailing `highlighted` column when non-empty.
void write_manhattan_csv(std::ostream& out, const Dataset& ds, const GwasScan& scan,
                         const IndexSet& highlight = {});

}  // namespace kiqr
