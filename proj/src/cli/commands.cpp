#include "kiqr/baselines.hpp"
#include "kiqr/cli.hpp"
#include "kiqr/csv.hpp"
#include "kiqr/parallel.hpp"
#include "kiqr/simulate.hpp"
#include "kiqr/solver.hpp"
#include "kiqr/tuning.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace kiqr::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> read_name_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    names.push_back(line);
  }
  return names;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Options shared by every command.
struct Common {
  std::string out = ".";
  std::optional<std::size_t> threads;
  bool timings = false;
  std::string config;

  void add(CLI::App& app) {
    app.add_option("--out", out, "Output directory")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (0 = auto; default from KIQR_THREADS)");
    app.add_flag("--timings", timings, "Record wall-clock times (outputs are then not byte-reproducible)");
    app.add_option("--config", config, "key=value file; command-line flags take precedence");
  }
  void apply() const {
    if (threads) set_thread_count(*threads);
    fs::create_directories(out);
  }
};

// Solver and grid settings shared by fit/tune and simulate.
struct SolverFlags {
  double gamma = kDefaultGamma;
  double scad_a = kDefaultScadA;
  int lla_passes = 3;
  double tol = 1e-7;
  int max_sweeps = 10000;
  std::vector<double> zetas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  bool include_zeta_one = false;
  int n_lambda = 50;
  double lambda_min_ratio = 0.01;
  Index max_support = TuningGrid::kAutoSupport;

  void add(CLI::App& app) {
    app.add_option("--gamma", gamma, "Huber smoothing half-width")->capture_default_str();
    app.add_option("--scad-a", scad_a, "SCAD shape parameter")->capture_default_str();
    app.add_option("--lla-passes", lla_passes, "Total passes including the initial LASSO fit")->capture_default_str();
    app.add_option("--tol", tol, "Convergence tolerance")->capture_default_str();
    app.add_option("--max-sweeps", max_sweeps, "Sweep limit per fit")->capture_default_str();
    app.add_option("--zetas", zetas, "Zeta grid")->delimiter(',');
    app.add_flag("--include-zeta-one", include_zeta_one, "Add zeta = 1 to the grid");
    app.add_option("--n-lambda", n_lambda, "Lambda path length")->capture_default_str();
    app.add_option("--lambda-min-ratio", lambda_min_ratio, "Smallest lambda as a fraction of lambda_max")
        ->capture_default_str();
    app.add_option("--max-support", max_support, "Stop a lambda path past this support size (0 = none; default n / 2)");
  }
  TuningGrid grid() const {
    TuningGrid g;
    g.zeta_values = zetas;
    g.include_zeta_one = include_zeta_one;
    g.n_lambda = n_lambda;
    g.lambda_min_ratio = lambda_min_ratio;
    g.max_support = max_support;
    return g;
  }
  TuningSettings settings(double tau) const {
    TuningSettings s;
    s.tau = tau;
    s.gamma = gamma;
    s.scad_a = scad_a;
    s.lla_passes = lla_passes;
    s.control.tol = tol;
    s.control.max_sweeps = max_sweeps;
    return s;
  }
  json to_json() const {
    return {{"gamma", gamma},         {"scad_a", scad_a},   {"lla_passes", lla_passes},
            {"tol", tol},             {"max_sweeps", max_sweeps}, {"zetas", zetas},
            {"include_zeta_one", include_zeta_one}, {"n_lambda", n_lambda},
            {"lambda_min_ratio", lambda_min_ratio}, {"max_support", max_support}};
  }
};

struct Context {
  std::vector<std::string> args;
  Clock::time_point start = Clock::now();
};

RunManifest make_manifest(const Context& ctx, const std::string& command, const json& config,
                          std::optional<unsigned long long> seed, const std::vector<std::string>& inputs,
                          bool timings) {
  RunManifest m;
  m.command = command;
  m.arguments = ctx.args;
  m.config_json = config.dump();
  m.seed = seed;
  for (const auto& path : inputs) m.inputs.emplace_back(path, sha256_file(path));
  if (timings) m.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - ctx.start).count();
  return m;
}

json tuning_json(const TuningResult& t) {
  json table = json::array();
  for (const auto& c : t.score_table)
    table.push_back({{"zeta", c.zeta},
                     {"lambda", c.lambda},
                     {"score", number_or_null(c.score)},
                     {"std_error", c.std_error},
                     {"support_size", c.support_size},
                     {"evaluated", c.evaluated},
                     {"failed", c.failed}});
  return {{"criterion", to_string(t.criterion)},
          {"rule", to_string(t.rule)},
          {"best_zeta", t.best_zeta},
          {"best_lambda", t.best_lambda},
          {"table", table}};
}

// ---------------------------------------------------------------- fit / tune

struct FitFlags {
  std::string data;
  std::string response = "y";
  double tau = 0.5;
  std::string prior_set;
  std::string prior_coefs;
  double zeta = 0.0;
  std::optional<double> lambda;
  std::string tune;
  int folds = 5;
  std::string rule = "minimum";
  unsigned long long seed = 1;
  SolverFlags solver;
  Common common;
};

void add_fit_options(CLI::App& app, FitFlags& f, bool tune_command) {
  app.add_option("--data", f.data, "CSV with a header row")->required();
  app.add_option("--response", f.response, "Response column")->capture_default_str();
  app.add_option("--tau", f.tau, "Quantile level")->required();
  app.add_option("--prior-set", f.prior_set, "File with one prior feature name per line");
  app.add_option("--prior-coefs", f.prior_coefs, "CSV feature,beta of prior coefficients ((intercept) allowed)");
  if (!tune_command) {
    app.add_option("--zeta", f.zeta, "Prior weight")->capture_default_str();
    app.add_option("--lambda", f.lambda, "Penalty level");
  }
  app.add_option("--tune", f.tune, "Select (zeta, lambda) by qbic or cv")
      ->check(CLI::IsMember({"qbic", "cv"}));
  app.add_option("--folds", f.folds, "Cross-validation folds")->capture_default_str();
  app.add_option("--rule", f.rule, "Cross-validation rule")->check(CLI::IsMember({"minimum", "one_se"}));
  app.add_option("--seed", f.seed, "Seed for fold assignment")->capture_default_str();
  f.solver.add(app);
  f.common.add(app);
}

PriorKnowledge read_prior_coefs(const Dataset& ds, const std::string& path) {
  const csv::Table t = csv::read(path);
  const long name_col = t.column("feature");
  const long beta_col = t.column("beta");
  if (name_col < 0 || beta_col < 0) throw Error(path + ": expected columns feature,beta");
  Vector beta = Vector::Zero(ds.d() + 1);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& name = t.rows[r][static_cast<std::size_t>(name_col)];
    const double value = csv::parse_number(t, r, static_cast<std::size_t>(beta_col));
    if (name == "(intercept)") {
      beta[0] = value;
      continue;
    }
    const auto j = ds.find_feature(name);
    if (!j) throw Error(path + ": unknown feature '" + name + "'");
    beta[*j + 1] = value;
  }
  return PriorCoefficients{beta};
}

int cmd_fit(const Context& ctx, FitFlags& f) {
  f.common.apply();
  if (!f.prior_set.empty() && !f.prior_coefs.empty())
    throw Error("--prior-set and --prior-coefs are mutually exclusive");
  const Dataset ds = load_csv(f.data, f.response);
  std::vector<std::string> inputs{f.data};
  std::optional<PriorKnowledge> prior;
  std::vector<std::string> prior_names;
  if (!f.prior_set.empty()) {
    prior_names = read_name_list(f.prior_set);
    prior = PriorSet{make_index_set(ds.feature_indices(prior_names))};
    inputs.push_back(f.prior_set);
  } else if (!f.prior_coefs.empty()) {
    prior = read_prior_coefs(ds, f.prior_coefs);
    inputs.push_back(f.prior_coefs);
  }

  FitResult fit;
  std::optional<TuningResult> tuning;
  double zeta = f.zeta;
  double lambda = 0.0;
  if (!f.tune.empty()) {
    TuningGrid grid = f.solver.grid();
    grid.folds = f.folds;
    grid.rule = f.rule == "one_se" ? SelectionRule::one_se : SelectionRule::minimum;
    const TuningSettings settings = f.solver.settings(f.tau);
    tuning = f.tune == "qbic" ? tune_qbic(ds, grid, settings, prior) : tune_cv(ds, grid, settings, prior, f.seed);
    fit = tuning->best_fit;
    zeta = tuning->best_zeta;
    lambda = tuning->best_lambda;
  } else {
    if (!f.lambda) throw Error("--lambda is required unless --tune is given");
    lambda = *f.lambda;
    FitConfig config = f.solver.settings(f.tau).config(zeta, lambda);
    config.validate();
    if (prior) {
      fit = fit_kiqr(ds, config, *prior);
    } else {
      if (zeta > 0.0) throw Error("--zeta > 0 needs --prior-set or --prior-coefs");
      fit = Problem(ds).kiqr(config, Vector::Zero(ds.n()));
    }
  }

  const fs::path out(f.common.out);
  std::ostringstream coefs;
  coefs << "feature,beta\n(intercept)," << csv::format_double(fit.beta[0]) << '\n';
  for (Index j = 0; j < ds.d(); ++j)
    coefs << ds.feature_names[static_cast<std::size_t>(j)] << ',' << csv::format_double(fit.beta[j + 1]) << '\n';
  write_text(out / "coefficients.csv", coefs.str());

  json config = {{"data", f.data},         {"response", f.response}, {"tau", f.tau},
                 {"prior_set", f.prior_set}, {"prior_coefs", f.prior_coefs}, {"zeta", f.zeta},
                 {"lambda", f.lambda ? json(*f.lambda) : json(nullptr)}, {"tune", f.tune},
                 {"folds", f.folds},       {"rule", f.rule},         {"solver", f.solver.to_json()}};
  const RunManifest manifest = make_manifest(ctx, ctx.args.front(), config, f.seed, inputs, f.common.timings);
  std::vector<std::string> support;
  for (Index j : fit.support) support.push_back(ds.feature_names[static_cast<std::size_t>(j)]);
  json doc;
  doc["tau"] = f.tau;
  doc["zeta"] = zeta;
  doc["lambda"] = lambda;
  doc["gamma"] = f.solver.gamma;
  doc["support"] = support;
  doc["converged"] = fit.converged;
  doc["sweeps_used"] = fit.sweeps_used;
  doc["objective_trace"] = fit.objective_trace;
  doc["tuning"] = tuning ? tuning_json(*tuning) : json(nullptr);
  doc["manifest"] = json::parse(manifest.to_json());
  write_text(out / "fit.json", doc.dump(2) + "\n");
  write_text(out / "manifest.json", manifest.to_json() + "\n");
  return 0;
}

// ------------------------------------------------------------------ simulate

// QBIC favours near-interpolating fits when d >> n; paths stop past this support.
constexpr Index kSimulationMaxSupport = 60;

struct SimulateFlags {
  std::string example;
  int reps = 1;
  std::vector<double> taus{0.5, 0.8};
  std::vector<std::string> scenarios{"S1", "S2", "S3", "S4"};
  std::vector<std::string> methods{"kiqr", "trad", "prior", "gwas"};
  unsigned long long seed = 1;
  std::string error = "normal";
  std::optional<double> rho;
  std::optional<Index> n;
  std::optional<Index> d;
  double gwas_threshold = kGenomeWideThreshold;
  bool data_only = false;
  SolverFlags solver;
  Common common;
};

void add_simulate_options(CLI::App& app, SimulateFlags& f) {
  f.solver.max_support = kSimulationMaxSupport;
  app.add_option("--example", f.example, "1, 2 or mimic")->required()->check(CLI::IsMember({"1", "2", "mimic"}));
  app.add_option("--reps", f.reps, "Replicates")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--taus", f.taus, "Quantile levels")->delimiter(',');
  app.add_option("--scenarios", f.scenarios, "Prior scenarios")->delimiter(',');
  app.add_option("--methods", f.methods, "kiqr, trad, prior, gwas")->delimiter(',');
  app.add_option("--seed", f.seed, "Base seed")->capture_default_str();
  app.add_option("--error", f.error, "Example 1 error law: normal or t3")->check(CLI::IsMember({"normal", "t3"}));
  app.add_option("--rho", f.rho, "Design correlation");
  app.add_option("--n", f.n, "Override the sample size");
  app.add_option("--d", f.d, "Override the feature count (mimic: SNP count + 2)");
  app.add_option("--gwas-threshold", f.gwas_threshold, "GWAS-QR p-value threshold")->capture_default_str();
  app.add_flag("--data-only", f.data_only, "Write replicate 0's dataset instead of running methods");
  f.solver.add(app);
  f.common.add(app);
}

SimDesign design_from(const SimulateFlags& f) {
  SimDesign design;
  const DesignKind kind = parse_design_kind(f.example);
  if (kind == DesignKind::example1)
    design = SimDesign::example1(f.error == "t3" ? ErrorLaw::student_t(3.0) : ErrorLaw::normal(1.0));
  else if (kind == DesignKind::example2)
    design = SimDesign::example2();
  else
    design = SimDesign::mimic();
  if (f.rho) design.rho = *f.rho;
  if (f.n) design.n = *f.n;
  if (f.d && *f.d != design.d) {
    const Index d = *f.d;
    Vector beta = Vector::Zero(d);
    const Index keep = std::min(d, design.d);
    beta.head(keep) = design.beta_true.head(keep);
    design.d = d;
    design.beta_true = beta;
  }
  design.seed = f.seed;
  design.validate();
  return design;
}

int cmd_simulate(const Context& ctx, SimulateFlags& f) {
  f.common.apply();
  const SimDesign design = design_from(f);
  std::vector<ScenarioLabel> scenarios;
  for (const auto& s : f.scenarios) scenarios.push_back(parse_scenario(s));
  std::vector<Method> methods;
  for (const auto& m : f.methods) methods.push_back(parse_method(m));
  for (double tau : f.taus) QuantileLevel check(tau);
  const fs::path out(f.common.out);
  json config = {{"example", f.example},
                 {"reps", f.reps},
                 {"taus", f.taus},
                 {"scenarios", f.scenarios},
                 {"methods", f.methods},
                 {"error", f.error},
                 {"rho", design.rho},
                 {"n", design.n},
                 {"d", design.d},
                 {"gwas_threshold", f.gwas_threshold},
                 {"data_only", f.data_only},
                 {"solver", f.solver.to_json()}};

  if (f.data_only) {
    const SimData data = generate(design, f.seed);
    write_csv(data.ds, (out / "data.csv").string(), "y");
    std::ostringstream beta;
    beta << "feature,beta\n";
    for (Index j = 0; j < data.ds.d(); ++j)
      beta << data.ds.feature_names[static_cast<std::size_t>(j)] << ',' << csv::format_double(data.beta_true[j])
           << '\n';
    write_text(out / "beta_true.csv", beta.str());
    if (design.kind == DesignKind::mimic) {
      const GenotypeMatrix gm = genotypes_of(data.ds);
      write_genotype_csv(gm, (out / "genotypes.csv").string());
      std::ostringstream meta;
      meta << "snp_id,chromosome,position\n";
      for (std::size_t k = 0; k < gm.snp_ids.size(); ++k)
        meta << gm.snp_ids[k] << ',' << (*gm.feature_meta)[k].chromosome << ',' << (*gm.feature_meta)[k].position
             << '\n';
      write_text(out / "snp_meta.csv", meta.str());
      std::ostringstream pheno;
      pheno << "y,age,sex\n";
      for (Index i = 0; i < data.ds.n(); ++i)
        pheno << csv::format_double(data.ds.y[i]) << ',' << csv::format_double(data.ds.X(i, 0)) << ','
              << csv::format_double(data.ds.X(i, 1)) << '\n';
      write_text(out / "phenotypes.csv", pheno.str());
    }
  } else {
    ReplicationOptions options;
    options.grid = f.solver.grid();
    options.settings = f.solver.settings(0.5);
    options.gwas_threshold = f.gwas_threshold;
    options.timings = f.common.timings;
    const ScenarioReport report =
        run_replications(design, scenarios, methods, f.taus, f.reps, f.seed, options);
    std::ostringstream rows;
    write_report_csv(rows, report);
    write_text(out / "replicates.csv", rows.str());
    std::ostringstream agg;
    write_aggregate_json(agg, report);
    write_text(out / "aggregate.json", agg.str());
  }
  const RunManifest manifest = make_manifest(ctx, "simulate", config, f.seed, {}, f.common.timings);
  write_text(out / "manifest.json", manifest.to_json() + "\n");
  return 0;
}

// ---------------------------------------------------------------------- gwas

struct GwasFlags {
  std::string data;
  std::string response = "y";
  std::vector<std::string> covariates;
  std::string method = "ols";
  std::optional<double> tau;
  double threshold = kGenomeWideThreshold;
  std::string highlight;
  std::string snp_meta;
  Common common;
};

void add_gwas_options(CLI::App& app, GwasFlags& f) {
  app.add_option("--data", f.data, "CSV with a header row")->required();
  app.add_option("--response", f.response, "Response column")->capture_default_str();
  app.add_option("--covariates", f.covariates, "Adjustment columns")->delimiter(',');
  app.add_option("--method", f.method, "ols or qr")->check(CLI::IsMember({"ols", "qr"}))->capture_default_str();
  app.add_option("--tau", f.tau, "Quantile level (qr)");
  app.add_option("--threshold", f.threshold, "Significance threshold")->capture_default_str();
  app.add_option("--highlight", f.highlight, "fit.json whose support is marked");
  app.add_option("--snp-meta", f.snp_meta, "CSV snp_id,chromosome,position");
  f.common.add(app);
}

int cmd_gwas(const Context& ctx, GwasFlags& f) {
  f.common.apply();
  if (f.method == "qr" && !f.tau) throw Error("--method qr needs --tau");
  if (f.method == "ols" && f.tau) warn("--tau is ignored with --method ols");
  Dataset ds = load_csv(f.data, f.response);
  std::vector<std::string> inputs{f.data};
  if (!f.snp_meta.empty()) {
    const csv::Table t = csv::read(f.snp_meta);
    const long id = t.column("snp_id");
    const long chr = t.column("chromosome");
    const long pos = t.column("position");
    if (id < 0 || chr < 0 || pos < 0) throw Error(f.snp_meta + ": expected columns snp_id,chromosome,position");
    std::vector<FeatureMeta> meta(static_cast<std::size_t>(ds.d()));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto j = ds.find_feature(t.rows[r][static_cast<std::size_t>(id)]);
      if (!j) continue;
      meta[static_cast<std::size_t>(*j)] = {
          static_cast<std::int64_t>(csv::parse_number(t, r, static_cast<std::size_t>(chr))),
          static_cast<std::int64_t>(csv::parse_number(t, r, static_cast<std::size_t>(pos)))};
    }
    ds.feature_meta = std::move(meta);
    inputs.push_back(f.snp_meta);
  }
  const IndexSet covariates = make_index_set(ds.feature_indices(f.covariates));
  const GwasMethod method = f.method == "qr" ? GwasMethod::qr(*f.tau) : GwasMethod::ols();
  const GwasScan scan = gwas_scan(ds, covariates, method, f.threshold);
  IndexSet highlight;
  if (!f.highlight.empty()) {
    std::ifstream in(f.highlight);
    if (!in) throw Error("cannot read " + f.highlight);
    nlohmann::json fit;
    in >> fit;
    highlight = make_index_set(ds.feature_indices(fit.at("support").get<std::vector<std::string>>()));
    inputs.push_back(f.highlight);
  }
  std::ostringstream csv_out;
  write_manhattan_csv(csv_out, ds, scan, highlight);
  const fs::path out(f.common.out);
  write_text(out / "manhattan.csv", csv_out.str());
  std::vector<std::string> selected;
  for (Index j : scan.selected) selected.push_back(ds.feature_names[static_cast<std::size_t>(j)]);
  json config = {{"data", f.data},           {"response", f.response}, {"covariates", f.covariates},
                 {"method", to_string(method)}, {"threshold", f.threshold}, {"highlight", f.highlight},
                 {"snp_meta", f.snp_meta}};
  const RunManifest manifest = make_manifest(ctx, "gwas", config, std::nullopt, inputs, f.common.timings);
  json summary = {{"tested", scan.results.size()}, {"selected", selected}, {"manifest", json::parse(manifest.to_json())}};
  write_text(out / "gwas.json", summary.dump(2) + "\n");
  write_text(out / "manifest.json", manifest.to_json() + "\n");
  return 0;
}

// ------------------------------------------------------------------------ qc

struct QcFlags {
  std::string genotypes;
  double maf_min = 0.1;
  double hwe_p = 0.001;
  Index top_k = 0;
  std::string phenotypes;
  std::string response = "y";
  std::vector<std::string> covariates;
  Common common;
};

void add_qc_options(CLI::App& app, QcFlags& f) {
  app.add_option("--genotypes", f.genotypes, "CSV of 0/1/2 dosages, one column per SNP")->required();
  app.add_option("--maf-min", f.maf_min, "Minimum minor allele frequency")->capture_default_str();
  app.add_option("--hwe-p", f.hwe_p, "Minimum Hardy-Weinberg p-value")->capture_default_str();
  app.add_option("--top-k", f.top_k, "Keep the k best marginally screened SNPs (0 = no screening)")
      ->capture_default_str();
  app.add_option("--phenotypes", f.phenotypes, "CSV with the response and covariates, rows aligned");
  app.add_option("--response", f.response, "Response column of the phenotype file")->capture_default_str();
  app.add_option("--covariates", f.covariates, "Covariate columns of the phenotype file")->delimiter(',');
  f.common.add(app);
}

int cmd_qc(const Context& ctx, QcFlags& f) {
  f.common.apply();
  const GenotypeMatrix gm = load_genotype_csv(f.genotypes);
  std::vector<std::string> inputs{f.genotypes};
  const std::vector<QcDecision> decisions = qc_decisions(gm, f.maf_min, f.hwe_p);
  std::vector<Index> passed;
  for (std::size_t j = 0; j < decisions.size(); ++j)
    if (decisions[j].kept) passed.push_back(static_cast<Index>(j));
  std::vector<double> screen_p(decisions.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<Index> kept = passed;
  if (f.top_k > 0) {
    if (f.phenotypes.empty()) throw Error("--top-k needs --phenotypes with the response");
    const Dataset pheno = load_csv(f.phenotypes, f.response);
    inputs.push_back(f.phenotypes);
    if (pheno.n() != gm.n()) throw Error("phenotype and genotype files differ in row count");
    const IndexSet cov_cols = pheno.feature_indices(f.covariates);
    Dataset ds;
    ds.y = pheno.y;
    ds.X.resize(gm.n(), static_cast<Index>(cov_cols.size() + passed.size()));
    for (std::size_t c = 0; c < cov_cols.size(); ++c) {
      ds.X.col(static_cast<Index>(c)) = pheno.X.col(cov_cols[c]);
      ds.feature_names.push_back(pheno.feature_names[static_cast<std::size_t>(cov_cols[c])]);
    }
    for (std::size_t k = 0; k < passed.size(); ++k) {
      ds.X.col(static_cast<Index>(cov_cols.size() + k)) = gm.G.col(passed[k]);
      ds.feature_names.push_back(gm.snp_ids[static_cast<std::size_t>(passed[k])]);
    }
    ds.validate();
    IndexSet covariates;
    for (std::size_t c = 0; c < cov_cols.size(); ++c) covariates.push_back(static_cast<Index>(c));
    const ScreenResult screen = marginal_screen_detailed(ds, covariates, f.top_k);
    for (std::size_t k = 0; k < passed.size(); ++k)
      screen_p[static_cast<std::size_t>(passed[k])] = screen.p_values[cov_cols.size() + k];
    kept.clear();
    for (Index col : screen.ranked) kept.push_back(passed[static_cast<std::size_t>(col) - cov_cols.size()]);
    std::sort(kept.begin(), kept.end());
  }
  const fs::path out(f.common.out);
  const GenotypeMatrix retained = gm.subset_columns(kept);
  fs::create_directories(out);
  write_genotype_csv(retained, (out / "genotypes_qc.csv").string());
  std::ostringstream summary;
  summary << "snp_id,maf,hwe_p,screen_p,kept\n";
  for (std::size_t j = 0; j < decisions.size(); ++j) {
    summary << gm.snp_ids[j] << ',' << csv::format_double(decisions[j].maf) << ','
            << csv::format_double(decisions[j].hwe_p) << ','
            << (std::isnan(screen_p[j]) ? std::string() : csv::format_double(screen_p[j])) << ','
            << (std::binary_search(kept.begin(), kept.end(), static_cast<Index>(j)) ? 1 : 0) << '\n';
  }
  write_text(out / "qc_summary.csv", summary.str());
  json config = {{"genotypes", f.genotypes}, {"maf_min", f.maf_min},   {"hwe_p", f.hwe_p},
                 {"top_k", f.top_k},         {"phenotypes", f.phenotypes}, {"response", f.response},
                 {"covariates", f.covariates}};
  const RunManifest manifest = make_manifest(ctx, "qc", config, std::nullopt, inputs, f.common.timings);
  write_text(out / "manifest.json", manifest.to_json() + "\n");
  return 0;
}

// -------------------------------------------------------------------- report

struct ReportFlags {
  std::string replicates;
  Common common;
};

void add_report_options(CLI::App& app, ReportFlags& f) {
  app.add_option("--replicates", f.replicates, "replicates.csv written by simulate")->required();
  f.common.add(app);
}

int cmd_report(const Context& ctx, ReportFlags& f) {
  f.common.apply();
  const csv::Table t = csv::read(f.replicates);
  auto col = [&](const char* name) {
    const long c = t.column(name);
    if (c < 0) throw Error(f.replicates + ": missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(c);
  };
  std::vector<ReplicateRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ReplicateRow row;
    row.replicate = static_cast<int>(csv::parse_number(t, r, col("replicate")));
    row.method = parse_method(t.rows[r][col("method")]);
    const std::string& scenario = t.rows[r][col("scenario")];
    if (!scenario.empty()) row.scenario = parse_scenario(scenario);
    row.tau = csv::parse_number(t, r, col("tau"));
    row.zeta = csv::parse_number(t, r, col("zeta"));
    row.lambda = csv::parse_number(t, r, col("lambda"));
    row.metrics.tp = static_cast<Index>(csv::parse_number(t, r, col("tp")));
    row.metrics.fp = static_cast<Index>(csv::parse_number(t, r, col("fp")));
    row.metrics.fn = static_cast<Index>(csv::parse_number(t, r, col("fn")));
    row.metrics.f1 = csv::parse_number(t, r, col("f1"));
    row.metrics.mse = csv::parse_number(t, r, col("mse"));
    row.x1_selected = csv::parse_number(t, r, col("x1_selected")) != 0.0;
    row.runtime_ms = csv::parse_number(t, r, col("runtime_ms"));
    row.failed = csv::parse_number(t, r, col("failed")) != 0.0;
    rows.push_back(row);
  }
  const std::vector<CellSummary> cells = summarize(rows);
  json cells_json = json::array();
  std::ostringstream bars;
  bars << "method,scenario,tau,mean_f1,se_f1,count,failures\n";
  for (const auto& c : cells) {
    json mean;
    json se;
    for (const auto& [name, value] : c.stats) {
      mean[name] = value.first;
      se[name] = value.second;
    }
    cells_json.push_back({{"method", to_string(c.method)},
                          {"scenario", c.scenario ? json(to_string(*c.scenario)) : json(nullptr)},
                          {"tau", c.tau},
                          {"count", c.count},
                          {"failures", c.failures},
                          {"mean", mean},
                          {"se", se}});
    double f1_se = 0.0;
    for (const auto& [name, value] : c.stats)
      if (name == "f1") f1_se = value.second;
    bars << to_string(c.method) << ',' << (c.scenario ? to_string(*c.scenario) : "") << ','
         << csv::format_double(c.tau) << ',' << csv::format_double(c.mean("f1")) << ',' << csv::format_double(f1_se)
         << ',' << c.count << ',' << c.failures << '\n';
  }
  const fs::path out(f.common.out);
  const RunManifest manifest = make_manifest(ctx, "report", {{"replicates", f.replicates}}, std::nullopt,
                                             {f.replicates}, f.common.timings);
  json doc = {{"cells", cells_json}, {"manifest", json::parse(manifest.to_json())}};
  write_text(out / "summary.json", doc.dump(2) + "\n");
  write_text(out / "f1_bars.csv", bars.str());
  write_text(out / "manifest.json", manifest.to_json() + "\n");
  return 0;
}

// ----------------------------------------------------------------- dispatch

std::vector<std::string> flag_names(const CLI::App& app) {
  std::vector<std::string> flags;
  for (const CLI::Option* opt : app.get_options())
    if (opt->get_expected_max() == 0)
      for (const auto& name : opt->get_lnames()) flags.push_back(name);
  return flags;
}

const char* kUsage =
    "usage: kiqr <command> [options]\n"
    "commands:\n"
    "  fit       fit KIQR at a given (zeta, lambda) or tuned with --tune\n"
    "  tune      fit KIQR with (zeta, lambda) selected by QBIC (default) or CV\n"
    "  simulate  run the simulation designs and write replicate reports\n"
    "  gwas      marginal association scan with Manhattan output\n"
    "  qc        genotype quality control and marginal screening\n"
    "  report    summarize a replicates.csv\n"
    "  rerun     repeat a command from its manifest.json\n"
    "run `kiqr <command> --help` for options\n";

int dispatch(const std::vector<std::string>& raw_args) {
  if (raw_args.empty()) {
    std::cerr << kUsage;
    return 2;
  }
  const std::string command = raw_args.front();
  if (command == "--help" || command == "-h" || command == "help") {
    std::cout << kUsage;
    return 0;
  }
  if (command == "--version") {
    std::cout << kVersion << '\n';
    return 0;
  }
  if (command == "rerun") {
    CLI::App app{"Repeat a command from its manifest", "kiqr rerun"};
    std::string manifest_path;
    std::optional<std::string> out;
    app.add_option("manifest", manifest_path, "manifest.json (or fit.json)")->required();
    app.add_option("--out", out, "Write to this directory instead");
    std::vector<std::string> rev(raw_args.rbegin(), raw_args.rend() - 1);
    try {
      app.parse(rev);
    } catch (const CLI::ParseError& e) {
      return app.exit(e);
    }
    const RunManifest m = RunManifest::from_json_file(manifest_path);
    for (const auto& [path, digest] : m.inputs)
      if (sha256_file(path) != digest) throw Error("input " + path + " changed since the manifest was written");
    std::vector<std::string> args = m.arguments;
    if (out) {
      const auto it = std::find(args.begin(), args.end(), "--out");
      if (it != args.end() && it + 1 != args.end())
        *(it + 1) = *out;
      else {
        args.push_back("--out");
        args.push_back(*out);
      }
    }
    return dispatch(args);
  }

  CLI::App app{"kiqr " + command, "kiqr " + command};
  FitFlags fit;
  SimulateFlags sim;
  GwasFlags gwas;
  QcFlags qc;
  ReportFlags report;
  if (command == "fit")
    add_fit_options(app, fit, false);
  else if (command == "tune")
    add_fit_options(app, fit, true);
  else if (command == "simulate")
    add_simulate_options(app, sim);
  else if (command == "gwas")
    add_gwas_options(app, gwas);
  else if (command == "qc")
    add_qc_options(app, qc);
  else if (command == "report")
    add_report_options(app, report);
  else {
    std::cerr << "error: unknown command '" << command << "'\n" << kUsage;
    return 2;
  }

  // Fold a --config file into the argument list, then drop the option.
  std::vector<std::string> args(raw_args.begin() + 1, raw_args.end());
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!config_path.empty()) args = merge_config(args, config_path, flag_names(app));

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, std::cout, std::cerr);
  }
  Context ctx;
  ctx.args = {command};
  ctx.args.insert(ctx.args.end(), args.begin(), args.end());
  if (command == "fit") return cmd_fit(ctx, fit);
  if (command == "tune") {
    if (fit.tune.empty()) fit.tune = "qbic";
    return cmd_fit(ctx, fit);
  }
  if (command == "simulate") return cmd_simulate(ctx, sim);
  if (command == "gwas") return cmd_gwas(ctx, gwas);
  if (command == "qc") return cmd_qc(ctx, qc);
  return cmd_report(ctx, report);
}

}  // namespace

std::vector<std::string> merge_config(const std::vector<std::string>& args, const std::string& config_path,
                                      const std::vector<std::string>& flags) {
  std::ifstream in(config_path);
  if (!in) throw Error("cannot read config file " + config_path);
  auto given = [&](const std::string& key) {
    for (const auto& a : args)
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
    return false;
  };
  std::vector<std::string> merged = args;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(config_path + ":" + std::to_string(line_no) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty()) throw Error(config_path + ":" + std::to_string(line_no) + ": empty key");
    if (key == "config") throw Error(config_path + ": config files cannot include other config files");
    if (given(key)) continue;
    if (std::find(flags.begin(), flags.end(), key) != flags.end()) {
      if (value == "true" || value == "1")
        merged.push_back("--" + key);
      else if (value != "false" && value != "0")
        throw Error(config_path + ":" + std::to_string(line_no) + ": flag '" + key + "' takes true or false");
      continue;
    }
    merged.push_back("--" + key);
    merged.push_back(value);
  }
  return merged;
}

int run(const std::vector<std::string>& args) {
  try {
    return dispatch(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace kiqr::cli
