#pragma once

// Data model, CSV ingestion, column standardization and the genotype QC /
// screening pipeline.

#include "kiqr/common.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace kiqr {

struct FeatureMeta {
  std::int64_t chromosome = 0;
  std::int64_t position = 0;

  bool operator==(const FeatureMeta&) const = default;
};

/// Dense design (rows = subjects) with response. Immutable by convention once
/// validated; every producer calls validate().
struct Dataset {
  Matrix X;
  Vector y;
  std::vector<std::string> feature_names;
  std::optional<std::vector<FeatureMeta>> feature_meta;

  Index n() const { return X.rows(); }
  Index d() const { return X.cols(); }

  /// Throws on non-finite cells, shape mismatch or duplicate names.
  void validate() const;

  /// Column index of a feature name, if present.
  std::optional<Index> find_feature(const std::string& name) const;
  /// Column indices for names; throws naming the first unknown one.
  IndexSet feature_indices(const std::vector<std::string>& names) const;

  /// Rows selected in the given order.
  Dataset subset_rows(std::span<const Index> rows) const;
  /// Columns selected in the given order.
  Dataset subset_columns(std::span<const Index> columns) const;
  Dataset with_response(Vector new_y) const;
};

/// Default "x1".."xd" names.
std::vector<std::string> default_feature_names(Index d, const std::string& prefix = "x");

struct Standardization {
  Vector means;
  Vector scales;               // > 0; 1 for constant columns
  std::vector<bool> constant;  // zero sample variance
  bool applied = false;

  Index size() const { return means.size(); }
  IndexSet constant_columns() const;

  /// Standardized-scale coefficients (intercept first) to the original scale.
  Vector to_original(const Vector& beta_std) const;
  /// Original-scale coefficients to the standardized scale.
  Vector to_standardized(const Vector& beta) const;
};

/// Centers every column and scales non-constant ones to unit sample sd.
std::pair<Dataset, Standardization> standardize(const Dataset& ds);
Dataset unstandardize(const Dataset& ds, const Standardization& st);

/// Reads a header-first numeric CSV; X keeps every non-response column in
/// file order.
Dataset load_csv(const std::string& path, const std::string& response_column);
/// Writes the response first, then the features.
void write_csv(const Dataset& ds, const std::string& path, const std::string& response_name = "y");

// --- genotypes ------------------------------------------------------------

struct GenotypeMatrix {
  Matrix G;  // entries in {0, 1, 2}
  std::vector<std::string> snp_ids;
  std::optional<std::vector<FeatureMeta>> feature_meta;

  Index n() const { return G.rows(); }
  Index m() const { return G.cols(); }
  void validate() const;
  GenotypeMatrix subset_columns(std::span<const Index> columns) const;
};

GenotypeMatrix load_genotype_csv(const std::string& path);
/// Sidecar `snp_id,chromosome,position`; rows matched to the matrix by id.
void attach_snp_meta(GenotypeMatrix& gm, const std::string& sidecar_path);
void write_genotype_csv(const GenotypeMatrix& gm, const std::string& path);

double minor_allele_frequency(std::span<const double> dosages);
/// 1-df chi-square goodness-of-fit test against Hardy-Weinberg proportions.
double hwe_pvalue(std::span<const double> dosages);

struct QcDecision {
  double maf = 0.0;
  double hwe_p = 1.0;
  bool kept = false;
};

std::vector<QcDecision> qc_decisions(const GenotypeMatrix& gm, double maf_min, double hwe_p_min);
GenotypeMatrix qc_filter(const GenotypeMatrix& gm, double maf_min, double hwe_p_min);

/// Column indices, best first, of the k screenable features with the
/// smallest marginal least-squares p-value, each test adjusting for
/// `covariates`. Ties go to the lower column index. Asking for more than the
/// screenable count returns all of them with a warning.
std::vector<Index> marginal_screen(const Dataset& ds, const IndexSet& covariates, Index k);

struct ScreenResult {
  std::vector<Index> ranked;     // best first, at most k entries
  std::vector<double> p_values;  // per column; NaN for covariates
};
ScreenResult marginal_screen_detailed(const Dataset& ds, const IndexSet& covariates, Index k);

}  // namespace kiqr
