#include "kiqr/dataset.hpp"

#include "kiqr/csv.hpp"
#include "kiqr/parallel.hpp"
#include "kiqr/stats.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

namespace kiqr {

namespace {

std::array<double, 3> genotype_counts(std::span<const double> g) {
  std::array<double, 3> counts{0.0, 0.0, 0.0};
  for (double v : g) {
    if (v == 0.0)
      counts[0] += 1.0;
    else if (v == 1.0)
      counts[1] += 1.0;
    else if (v == 2.0)
      counts[2] += 1.0;
    else
      throw Error("genotype dosage " + csv::format_double(v) + " outside {0,1,2}");
  }
  return counts;
}

}  // namespace

void GenotypeMatrix::validate() const {
  if (static_cast<Index>(snp_ids.size()) != G.cols()) throw Error("snp id count does not match genotype columns");
  if (feature_meta && static_cast<Index>(feature_meta->size()) != G.cols())
    throw Error("snp metadata length does not match genotype columns");
  std::set<std::string> seen;
  for (const auto& id : snp_ids)
    if (!seen.insert(id).second) throw Error("duplicate snp id '" + id + "'");
  for (Index j = 0; j < G.cols(); ++j)
    for (Index i = 0; i < G.rows(); ++i) {
      const double v = G(i, j);
      if (v != 0.0 && v != 1.0 && v != 2.0)
        throw Error("genotype entry at row " + std::to_string(i + 1) + ", snp '" + snp_ids[static_cast<std::size_t>(j)] +
                    "' is not 0/1/2");
    }
}

GenotypeMatrix GenotypeMatrix::subset_columns(std::span<const Index> columns) const {
  GenotypeMatrix out;
  out.G.resize(G.rows(), static_cast<Index>(columns.size()));
  if (feature_meta) out.feature_meta.emplace();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out.G.col(static_cast<Index>(c)) = G.col(columns[c]);
    out.snp_ids.push_back(snp_ids[static_cast<std::size_t>(columns[c])]);
    if (feature_meta) out.feature_meta->push_back((*feature_meta)[static_cast<std::size_t>(columns[c])]);
  }
  return out;
}

GenotypeMatrix load_genotype_csv(const std::string& path) {
  const csv::Table t = csv::read(path);
  GenotypeMatrix gm;
  gm.snp_ids = t.header;
  gm.G.resize(static_cast<Index>(t.rows.size()), static_cast<Index>(t.header.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      const double v = csv::parse_number(t, i, j);
      if (v != 0.0 && v != 1.0 && v != 2.0)
        throw Error(path + ": genotype cell '" + t.rows[i][j] + "' at row " + std::to_string(i + 1) + ", column '" +
                    t.header[j] + "' is not 0/1/2");
      gm.G(static_cast<Index>(i), static_cast<Index>(j)) = v;
    }
  gm.validate();
  return gm;
}

void attach_snp_meta(GenotypeMatrix& gm, const std::string& sidecar_path) {
  const csv::Table t = csv::read(sidecar_path);
  const long id_col = t.column("snp_id");
  const long chr_col = t.column("chromosome");
  const long pos_col = t.column("position");
  if (id_col < 0 || chr_col < 0 || pos_col < 0)
    throw Error(sidecar_path + ": expected columns snp_id,chromosome,position");
  std::unordered_map<std::string, FeatureMeta> lookup;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    FeatureMeta meta;
    meta.chromosome = static_cast<std::int64_t>(csv::parse_number(t, r, static_cast<std::size_t>(chr_col)));
    meta.position = static_cast<std::int64_t>(csv::parse_number(t, r, static_cast<std::size_t>(pos_col)));
    lookup[t.rows[r][static_cast<std::size_t>(id_col)]] = meta;
  }
  std::vector<FeatureMeta> meta;
  meta.reserve(gm.snp_ids.size());
  for (const auto& id : gm.snp_ids) {
    const auto it = lookup.find(id);
    if (it == lookup.end()) throw Error(sidecar_path + ": no metadata for snp '" + id + "'");
    meta.push_back(it->second);
  }
  gm.feature_meta = std::move(meta);
}

void write_genotype_csv(const GenotypeMatrix& gm, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (std::size_t j = 0; j < gm.snp_ids.size(); ++j) out << (j ? "," : "") << gm.snp_ids[j];
  out << '\n';
  for (Index i = 0; i < gm.n(); ++i) {
    for (Index j = 0; j < gm.m(); ++j) out << (j ? "," : "") << static_cast<int>(gm.G(i, j));
    out << '\n';
  }
  if (!out) throw Error("failed writing " + path);
}

double minor_allele_frequency(std::span<const double> g) {
  if (g.empty()) throw Error("allele frequency of an empty genotype vector");
  const auto c = genotype_counts(g);
  const double p = (c[1] + 2.0 * c[2]) / (2.0 * static_cast<double>(g.size()));
  return std::min(p, 1.0 - p);
}

double hwe_pvalue(std::span<const double> g) {
  if (g.empty()) throw Error("HWE test of an empty genotype vector");
  const auto c = genotype_counts(g);
  const double n = static_cast<double>(g.size());
  const double p = (c[1] + 2.0 * c[2]) / (2.0 * n);
  const std::array<double, 3> expected{n * (1.0 - p) * (1.0 - p), 2.0 * n * p * (1.0 - p), n * p * p};
  double stat = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (expected[k] > 0.0) stat += (c[k] - expected[k]) * (c[k] - expected[k]) / expected[k];
  }
  return stats::chi_square_1df_sf(stat);
}

std::vector<QcDecision> qc_decisions(const GenotypeMatrix& gm, double maf_min, double hwe_p_min) {
  if (!(maf_min >= 0.0 && maf_min <= 0.5)) throw Error("maf threshold must lie in [0, 0.5]");
  if (!(hwe_p_min >= 0.0 && hwe_p_min <= 1.0)) throw Error("HWE threshold must lie in [0, 1]");
  std::vector<QcDecision> out(static_cast<std::size_t>(gm.m()));
  parallel_for(out.size(), [&](std::size_t j) {
    const auto col = gm.G.col(static_cast<Index>(j));
    const std::span<const double> g(col.data(), static_cast<std::size_t>(col.size()));
    QcDecision d;
    d.maf = minor_allele_frequency(g);
    d.hwe_p = hwe_pvalue(g);
    d.kept = d.maf >= maf_min && d.hwe_p >= hwe_p_min;
    out[j] = d;
  });
  return out;
}

GenotypeMatrix qc_filter(const GenotypeMatrix& gm, double maf_min, double hwe_p_min) {
  const auto decisions = qc_decisions(gm, maf_min, hwe_p_min);
  std::vector<Index> keep;
  for (std::size_t j = 0; j < decisions.size(); ++j)
    if (decisions[j].kept) keep.push_back(static_cast<Index>(j));
  return gm.subset_columns(keep);
}

}  // namespace kiqr
