#pragma once

// Seeded synthetic designs (AR(1) Gaussian examples and a genotype-like
// mimic), prior-knowledge scenarios and the replication runner.

#include "kiqr/baselines.hpp"
#include "kiqr/metrics.hpp"
#include "kiqr/tuning.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace kiqr {

enum class DesignKind { example1, example2, mimic };

std::string to_string(DesignKind kind);
DesignKind parse_design_kind(const std::string& text);

struct ErrorLaw {
  enum class Kind { normal, student_t } kind = Kind::normal;
  double scale = 1.0;  // sd for normal, multiplier for student_t
  double df = 3.0;

  static ErrorLaw normal(double sd) { return {Kind::normal, sd, 0.0}; }
  static ErrorLaw student_t(double df) { return {Kind::student_t, 1.0, df}; }
};

std::string to_string(const ErrorLaw& law);

struct SimDesign {
  DesignKind kind = DesignKind::example1;
  Index n = 200;
  Index d = 1500;
  double rho = 0.5;
  ErrorLaw error = ErrorLaw::normal(1.0);
  Vector beta_true;  // slopes, length d
  std::uint64_t seed = 1;

  static SimDesign example1(ErrorLaw error = ErrorLaw::normal(1.0));
  static SimDesign example2();
  /// age, sex and 1500 SNP columns; SNP correlation rho (default 0).
  static SimDesign mimic(double rho = 0.0);

  void validate() const;
};

struct SimData {
  Dataset ds;
  Vector beta_true;
  /// Features treated as true predictors when drawing prior scenarios.
  IndexSet prior_truth;
  /// Features left out of selection metrics (the heteroscedastic X1 in
  /// example 2).
  IndexSet excluded;
};

/// Rows i.i.d. N(0, Sigma) with Sigma_jk = rho^|j - k| via the exact AR(1)
/// recursion.
Matrix gen_ar1_gaussian(Index n, Index d, double rho, std::uint64_t seed);

SimData gen_example1(const SimDesign& design, std::uint64_t seed);
/// X1 = Phi(X1~) scales the error, so it moves upper quantiles but not the
/// median.
SimData gen_example2(const SimDesign& design, std::uint64_t seed);
/// Synthetic genotype-like design; every SNP column is redrawn until it
/// passes MAF >= 0.1 and HWE p >= 0.001.
SimData gen_mimic(const SimDesign& design, std::uint64_t seed);
SimData generate(const SimDesign& design, std::uint64_t seed);

/// SNP columns of a mimic dataset as a genotype matrix.
GenotypeMatrix genotypes_of(const Dataset& mimic);

enum class ScenarioLabel { S1, S2, S3, S4 };

std::string to_string(ScenarioLabel label);
ScenarioLabel parse_scenario(const std::string& text);

struct PriorScenario {
  ScenarioLabel label = ScenarioLabel::S1;
  IndexSet prior_set;
};

/// With s true predictors: S1 all of them; S2 ceil(s/2) true + 2 false;
/// S3 ceil(s/4) true + 15 false; S4 20 false. True members and false
/// members are drawn without replacement, seeded.
PriorScenario make_prior_scenario(ScenarioLabel label, const IndexSet& truth, Index d, std::uint64_t seed);
PriorScenario make_prior_scenario(ScenarioLabel label, const Vector& beta_true, std::uint64_t seed);

enum class Method { kiqr, trad_qr, prior_qr, gwas_qr };

std::string to_string(Method method);
Method parse_method(const std::string& text);

struct ReplicationOptions {
  TuningGrid grid;
  TuningSettings settings;  // tau is set per cell
  double gwas_threshold = kGenomeWideThreshold;
  /// Record wall-clock runtimes; off keeps reports byte-reproducible.
  bool timings = false;
};

struct ReplicateRow {
  int replicate = 0;
  Method method = Method::kiqr;
  std::optional<ScenarioLabel> scenario;  // prior-based methods only
  double tau = 0.5;
  double zeta = 0.0;
  double lambda = 0.0;
  SelectionMetrics metrics;
  bool x1_selected = false;
  double runtime_ms = 0.0;
  bool failed = false;
};

struct CellSummary {
  Method method = Method::kiqr;
  std::optional<ScenarioLabel> scenario;
  double tau = 0.5;
  int count = 0;
  int failures = 0;
  // mean and Monte Carlo standard error per metric
  std::vector<std::pair<std::string, std::pair<double, double>>> stats;

  double mean(const std::string& metric) const;
};

struct ScenarioReport {
  SimDesign design;
  std::vector<ScenarioLabel> scenarios;
  std::vector<Method> methods;
  std::vector<double> taus;
  int reps = 0;
  std::uint64_t seed = 0;
  double gwas_threshold = kGenomeWideThreshold;
  std::vector<ReplicateRow> rows;  // replicate-major, then tau, method, scenario
  std::vector<CellSummary> cells;

  const CellSummary& cell(Method method, std::optional<ScenarioLabel> scenario, double tau) const;
};

ScenarioReport run_replications(const SimDesign& design, const std::vector<ScenarioLabel>& scenarios,
                                const std::vector<Method>& methods, const std::vector<double>& taus, int reps,
                                std::uint64_t seed, const ReplicationOptions& options = {});

/// Means and standard errors recomputed from the rows.
std::vector<CellSummary> summarize(const std::vector<ReplicateRow>& rows);

void write_report_csv(std::ostream& out, const ScenarioReport& report);
void write_aggregate_json(std::ostream& out, const ScenarioReport& report);

}  // namespace kiqr
