#include "kiqr/metrics.hpp"

namespace kiqr {

double f1_score(Index tp, Index fp, Index fn) {
  const Index denom = 2 * tp + fp + fn;
  if (denom == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

SelectionMetrics selection_metrics(const Vector& beta_hat, const Vector& beta_true, const IndexSet& excluded) {
  if (beta_hat.size() != beta_true.size()) throw Error("coefficient vectors differ in length");
  SelectionMetrics m;
  m.excluded = make_index_set(excluded);
  double sq = 0.0;
  Index counted = 0;
  for (Index j = 0; j < beta_hat.size(); ++j) {
    if (contains(m.excluded, j)) continue;
    const bool selected = beta_hat[j] != 0.0;
    const bool truth = beta_true[j] != 0.0;
    if (selected && truth) ++m.tp;
    if (selected && !truth) ++m.fp;
    if (!selected && truth) ++m.fn;
    const double e = beta_hat[j] - beta_true[j];
    sq += e * e;
    ++counted;
  }
  m.f1 = f1_score(m.tp, m.fp, m.fn);
  m.mse = counted > 0 ? sq / static_cast<double>(counted) : 0.0;
  return m;
}

double x1_selection_rate(const std::vector<IndexSet>& supports, Index feature) {
  if (supports.empty()) throw Error("selection rate of an empty list of fits");
  std::size_t hits = 0;
  for (const auto& s : supports)
    if (contains(s, feature)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(supports.size());
}

double x1_selection_rate(const std::vector<FitResult>& fits, Index feature) {
  std::vector<IndexSet> supports;
  supports.reserve(fits.size());
  for (const auto& f : fits) supports.push_back(f.support);
  return x1_selection_rate(supports, feature);
}

}  // namespace kiqr
