#include "kiqr/dataset.hpp"

#include "kiqr/csv.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

namespace kiqr {

void Dataset::validate() const {
  if (y.size() != X.rows())
    throw Error("response length " + std::to_string(y.size()) + " does not match " +
                std::to_string(X.rows()) + " rows");
  if (static_cast<Index>(feature_names.size()) != X.cols())
    throw Error("expected " + std::to_string(X.cols()) + " feature names, got " +
                std::to_string(feature_names.size()));
  if (feature_meta && static_cast<Index>(feature_meta->size()) != X.cols())
    throw Error("feature metadata length does not match feature count");
  std::set<std::string> seen;
  for (const auto& name : feature_names)
    if (!seen.insert(name).second) throw Error("duplicate feature name '" + name + "'");
  if (!X.allFinite()) throw Error("design matrix contains non-finite entries");
  if (!y.allFinite()) throw Error("response contains non-finite entries");
}

std::optional<Index> Dataset::find_feature(const std::string& name) const {
  for (std::size_t j = 0; j < feature_names.size(); ++j)
    if (feature_names[j] == name) return static_cast<Index>(j);
  return std::nullopt;
}

IndexSet Dataset::feature_indices(const std::vector<std::string>& names) const {
  std::unordered_map<std::string, Index> lookup;
  for (std::size_t j = 0; j < feature_names.size(); ++j) lookup.emplace(feature_names[j], static_cast<Index>(j));
  std::vector<Index> out;
  for (const auto& name : names) {
    const auto it = lookup.find(name);
    if (it == lookup.end()) throw Error("unknown feature '" + name + "'");
    out.push_back(it->second);
  }
  return make_index_set(std::move(out));
}

Dataset Dataset::subset_rows(std::span<const Index> rows) const {
  Dataset out;
  out.X.resize(static_cast<Index>(rows.size()), X.cols());
  out.y.resize(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.X.row(static_cast<Index>(r)) = X.row(rows[r]);
    out.y[static_cast<Index>(r)] = y[rows[r]];
  }
  out.feature_names = feature_names;
  out.feature_meta = feature_meta;
  return out;
}

Dataset Dataset::subset_columns(std::span<const Index> columns) const {
  Dataset out;
  out.X.resize(X.rows(), static_cast<Index>(columns.size()));
  out.y = y;
  if (feature_meta) out.feature_meta.emplace();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out.X.col(static_cast<Index>(c)) = X.col(columns[c]);
    out.feature_names.push_back(feature_names[static_cast<std::size_t>(columns[c])]);
    if (feature_meta) out.feature_meta->push_back((*feature_meta)[static_cast<std::size_t>(columns[c])]);
  }
  return out;
}

Dataset Dataset::with_response(Vector new_y) const {
  Dataset out = *this;
  out.y = std::move(new_y);
  out.validate();
  return out;
}

std::vector<std::string> default_feature_names(Index d, const std::string& prefix) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) names.push_back(prefix + std::to_string(j + 1));
  return names;
}

// --- standardization --------------------------------------------------------

IndexSet Standardization::constant_columns() const {
  IndexSet out;
  for (std::size_t j = 0; j < constant.size(); ++j)
    if (constant[j]) out.push_back(static_cast<Index>(j));
  return out;
}

Vector Standardization::to_original(const Vector& beta_std) const {
  if (beta_std.size() != means.size() + 1) throw Error("coefficient length does not match standardization");
  Vector beta(beta_std.size());
  beta[0] = beta_std[0];
  for (Index j = 0; j < means.size(); ++j) {
    beta[j + 1] = beta_std[j + 1] / scales[j];
    beta[0] -= beta[j + 1] * means[j];
  }
  return beta;
}

Vector Standardization::to_standardized(const Vector& beta) const {
  if (beta.size() != means.size() + 1) throw Error("coefficient length does not match standardization");
  Vector beta_std(beta.size());
  beta_std[0] = beta[0];
  for (Index j = 0; j < means.size(); ++j) {
    beta_std[j + 1] = beta[j + 1] * scales[j];
    beta_std[0] += beta[j + 1] * means[j];
  }
  return beta_std;
}

std::pair<Dataset, Standardization> standardize(const Dataset& ds) {
  const Index n = ds.n();
  if (n < 2) throw Error("standardization needs at least 2 observations");
  Standardization st;
  st.means.resize(ds.d());
  st.scales.resize(ds.d());
  st.constant.assign(static_cast<std::size_t>(ds.d()), false);
  st.applied = true;
  Dataset out = ds;
  for (Index j = 0; j < ds.d(); ++j) {
    const auto col = ds.X.col(j);
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) sum += col[i];
    const double mean = sum / static_cast<double>(n);
    bool is_constant = true;
    for (Index i = 1; i < n && is_constant; ++i) is_constant = col[i] == col[0];
    double ss = 0.0;
    for (Index i = 0; i < n; ++i) ss += (col[i] - mean) * (col[i] - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    st.means[j] = is_constant ? col[0] : mean;
    st.scales[j] = (is_constant || !(sd > 0.0)) ? 1.0 : sd;
    st.constant[static_cast<std::size_t>(j)] = is_constant || !(sd > 0.0);
    for (Index i = 0; i < n; ++i) out.X(i, j) = (col[i] - st.means[j]) / st.scales[j];
  }
  return {std::move(out), std::move(st)};
}

Dataset unstandardize(const Dataset& ds, const Standardization& st) {
  if (st.size() != ds.d()) throw Error("standardization does not match dataset width");
  Dataset out = ds;
  for (Index j = 0; j < ds.d(); ++j)
    for (Index i = 0; i < ds.n(); ++i) out.X(i, j) = ds.X(i, j) * st.scales[j] + st.means[j];
  return out;
}

// --- CSV ---------------------------------------------------------------------

Dataset load_csv(const std::string& path, const std::string& response_column) {
  const csv::Table t = csv::read(path);
  const long resp = t.column(response_column);
  if (resp < 0) throw Error(path + ": missing response column '" + response_column + "'");
  const auto n = static_cast<Index>(t.rows.size());
  const auto d = static_cast<Index>(t.header.size()) - 1;
  Dataset ds;
  ds.X.resize(n, d);
  ds.y.resize(n);
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (static_cast<long>(c) != resp) ds.feature_names.push_back(t.header[c]);
  for (Index i = 0; i < n; ++i) {
    Index j = 0;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      const double v = csv::parse_number(t, static_cast<std::size_t>(i), c);
      if (static_cast<long>(c) == resp)
        ds.y[i] = v;
      else
        ds.X(i, j++) = v;
    }
  }
  ds.validate();
  return ds;
}

void write_csv(const Dataset& ds, const std::string& path, const std::string& response_name) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << response_name;
  for (const auto& name : ds.feature_names) out << ',' << name;
  out << '\n';
  for (Index i = 0; i < ds.n(); ++i) {
    out << csv::format_double(ds.y[i]);
    for (Index j = 0; j < ds.d(); ++j) out << ',' << csv::format_double(ds.X(i, j));
    out << '\n';
  }
  if (!out) throw Error("failed writing " + path);
}

}  // namespace kiqr
