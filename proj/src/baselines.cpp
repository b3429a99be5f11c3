#include "kiqr/baselines.hpp"

#include "kiqr/csv.hpp"
#include "kiqr/parallel.hpp"
#include "kiqr/solver.hpp"
#include "kiqr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace kiqr {

namespace {

constexpr double kDensityFloor = 1e-12;

// [1, x_feature, covariates] on the original scale.
Matrix marginal_design(const Dataset& ds, Index feature, const IndexSet& covariates) {
  if (feature < 0 || feature >= ds.d()) throw Error("feature index out of range");
  for (Index c : covariates) {
    if (c < 0 || c >= ds.d()) throw Error("covariate index out of range");
    if (c == feature) throw Error("a feature cannot be its own covariate");
  }
  const Index p = 2 + static_cast<Index>(covariates.size());
  if (ds.n() <= p) throw Error("marginal test needs n > |covariates| + 2");
  Matrix Z(ds.n(), p);
  Z.col(0).setOnes();
  Z.col(1) = ds.X.col(feature);
  for (std::size_t k = 0; k < covariates.size(); ++k) Z.col(static_cast<Index>(k) + 2) = ds.X.col(covariates[k]);
  return Z;
}

bool full_rank(const Matrix& Z) {
  Eigen::ColPivHouseholderQR<Matrix> qr(Z);
  return qr.rank() == Z.cols();
}

MarginalTestResult degenerate_result(Index feature) {
  MarginalTestResult r;
  r.feature = feature;
  r.p_value = 1.0;
  r.degenerate = true;
  return r;
}

double floored(double p) { return std::clamp(p, kPValueFloor, 1.0); }

}  // namespace

MarginalTestResult marginal_ols_pvalue(const Dataset& ds, Index feature, const IndexSet& covariates) {
  const Matrix Z = marginal_design(ds, feature, covariates);
  if (!full_rank(Z)) return degenerate_result(feature);
  const Index n = Z.rows();
  const Index p = Z.cols();
  const Matrix gram = Z.transpose() * Z;
  const Eigen::LDLT<Matrix> ldlt(gram);
  const Vector beta = ldlt.solve(Z.transpose() * ds.y);
  const Vector resid = ds.y - Z * beta;
  const double sigma2 = resid.squaredNorm() / static_cast<double>(n - p);
  const Vector e1 = Vector::Unit(p, 1);
  const double var = sigma2 * ldlt.solve(e1)[1];
  MarginalTestResult r;
  r.feature = feature;
  r.estimate = beta[1];
  r.std_error = std::sqrt(std::max(var, 0.0));
  if (r.std_error == 0.0)
    r.p_value = beta[1] == 0.0 ? 1.0 : kPValueFloor;
  else
    r.p_value = floored(stats::student_t_two_sided(beta[1] / r.std_error, static_cast<double>(n - p)));
  return r;
}

double sparsity_density(const Vector& residuals, double tau) {
  const Index n = residuals.size();
  if (n < 2) throw Error("density estimate needs at least 2 residuals");
  const double alpha = 0.05;
  const double z_alpha = stats::normal_quantile(1.0 - alpha / 2.0);
  const double z_tau = stats::normal_quantile(tau);
  const double phi = stats::normal_pdf(z_tau);
  double h = std::pow(static_cast<double>(n), -1.0 / 3.0) * std::pow(z_alpha, 2.0 / 3.0) *
             std::pow(1.5 * phi * phi / (2.0 * z_tau * z_tau + 1.0), 1.0 / 3.0);
  // Keep tau +- h inside (0, 1).
  h = std::min(h, 0.999 * std::min(tau, 1.0 - tau));
  std::vector<double> sorted(residuals.data(), residuals.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const double sd = stats::sample_sd(sorted);
  const double iqr = stats::interpolated_quantile(sorted, 0.75) - stats::interpolated_quantile(sorted, 0.25);
  double kappa = std::min(sd, iqr / 1.34);
  if (!(kappa > 0.0)) kappa = std::max(sd, iqr / 1.34);
  const double bandwidth = kappa * (stats::normal_quantile(tau + h) - stats::normal_quantile(tau - h));
  if (!(bandwidth > 0.0)) return 0.0;
  Index inside = 0;
  for (Index i = 0; i < n; ++i)
    if (std::abs(residuals[i]) <= bandwidth) ++inside;
  return static_cast<double>(inside) / (2.0 * static_cast<double>(n) * bandwidth);
}

MarginalTestResult marginal_qr_pvalue(const Dataset& ds, Index feature, const IndexSet& covariates, double tau,
                                      double gamma) {
  const QuantileLevel level(tau);
  const Matrix Z = marginal_design(ds, feature, covariates);
  if (!full_rank(Z)) return degenerate_result(feature);
  std::vector<Index> columns{feature};
  columns.insert(columns.end(), covariates.begin(), covariates.end());
  const Dataset sub = ds.subset_columns(columns);
  const Problem problem(sub);
  const FitResult fit = problem.descend(level, SmoothingParam(gamma), 0.0, nullptr, l1_weights(sub.d(), 0.0),
                                        nullptr, SolverControl{});
  const Vector resid = ds.y - Z * fit.beta;
  const double f0 = sparsity_density(resid, tau);
  if (!(f0 >= kDensityFloor)) return degenerate_result(feature);
  const Eigen::LDLT<Matrix> ldlt(Z.transpose() * Z);
  const double var = tau * (1.0 - tau) / (f0 * f0) * ldlt.solve(Vector::Unit(Z.cols(), 1))[1];
  MarginalTestResult r;
  r.feature = feature;
  r.estimate = fit.beta[1];
  r.std_error = std::sqrt(std::max(var, 0.0));
  if (r.std_error == 0.0) return degenerate_result(feature);
  r.p_value = floored(stats::normal_two_sided(r.estimate / r.std_error));
  return r;
}

std::string to_string(const GwasMethod& method) {
  return method.kind == GwasMethod::Kind::ols ? "ols" : "qr(" + csv::format_double(method.tau) + ")";
}

GwasScan gwas_scan(const Dataset& ds, const IndexSet& covariates, const GwasMethod& method, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error("threshold must lie in (0, 1]");
  const IndexSet cov = make_index_set(covariates);
  std::vector<Index> features;
  for (Index j = 0; j < ds.d(); ++j)
    if (!contains(cov, j)) features.push_back(j);
  GwasScan scan;
  scan.results.resize(features.size());
  parallel_for(features.size(), [&](std::size_t k) {
    const Index j = features[k];
    try {
      scan.results[k] = method.kind == GwasMethod::Kind::ols ? marginal_ols_pvalue(ds, j, cov)
                                                             : marginal_qr_pvalue(ds, j, cov, method.tau);
    } catch (const Error&) {
      scan.results[k] = degenerate_result(j);
    }
  });
  for (const auto& r : scan.results)
    if (r.p_value < threshold) scan.selected.push_back(r.feature);
  return scan;
}

void write_manhattan_csv(std::ostream& out, const Dataset& ds, const GwasScan& scan, const IndexSet& highlight) {
  out << "feature,chromosome,position,estimate,p_value,neg_log10_p,selected";
  if (!highlight.empty()) out << ",highlighted";
  out << '\n';
  for (const auto& r : scan.results) {
    out << ds.feature_names[static_cast<std::size_t>(r.feature)] << ',';
    if (ds.feature_meta) {
      const auto& m = (*ds.feature_meta)[static_cast<std::size_t>(r.feature)];
      out << m.chromosome << ',' << m.position;
    } else {
      out << ',';
    }
    out << ',' << csv::format_double(r.estimate) << ',' << csv::format_double(r.p_value) << ','
        << csv::format_double(-std::log10(r.p_value)) << ',' << (contains(scan.selected, r.feature) ? 1 : 0);
    if (!highlight.empty()) out << ',' << (contains(highlight, r.feature) ? 1 : 0);
    out << '\n';
  }
}

}  // namespace kiqr
