#include "kiqr/baselines.hpp"
#include "kiqr/dataset.hpp"
#include "kiqr/parallel.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace kiqr {

ScreenResult marginal_screen_detailed(const Dataset& ds, const IndexSet& covariates, Index k) {
  if (k < 0) throw Error("screening size must be nonnegative");
  const IndexSet cov = make_index_set(covariates);
  ScreenResult out;
  out.p_values.assign(static_cast<std::size_t>(ds.d()), std::numeric_limits<double>::quiet_NaN());
  std::vector<Index> screenable;
  for (Index j = 0; j < ds.d(); ++j)
    if (!contains(cov, j)) screenable.push_back(j);
  parallel_for(screenable.size(), [&](std::size_t i) {
    const Index j = screenable[i];
    out.p_values[static_cast<std::size_t>(j)] = marginal_ols_pvalue(ds, j, cov).p_value;
  });
  std::vector<Index> order = screenable;
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return out.p_values[static_cast<std::size_t>(a)] < out.p_values[static_cast<std::size_t>(b)];
  });
  if (k > static_cast<Index>(order.size())) {
    warn("screening asked for " + std::to_string(k) + " features but only " + std::to_string(order.size()) +
         " are screenable; keeping all");
    k = static_cast<Index>(order.size());
  }
  order.resize(static_cast<std::size_t>(k));
  out.ranked = std::move(order);
  return out;
}

std::vector<Index> marginal_screen(const Dataset& ds, const IndexSet& covariates, Index k) {
  return marginal_screen_detailed(ds, covariates, k).ranked;
}

}  // namespace kiqr
