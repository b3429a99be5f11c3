#include "kiqr/simulate.hpp"

#include "kiqr/csv.hpp"
#include "kiqr/parallel.hpp"
#include "kiqr/rng.hpp"
#include "kiqr/stats.hpp"

#include <json.hpp>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/student_t_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>

namespace kiqr {

namespace {

constexpr std::uint64_t kStreamDesign = 1;
constexpr std::uint64_t kStreamError = 2;
constexpr std::uint64_t kStreamMaf = 3;
constexpr std::uint64_t kStreamCovariates = 4;
constexpr std::uint64_t kStreamScenario = 16;
constexpr std::uint64_t kStreamSnp = 1u << 20;
constexpr int kMaxSnpAttempts = 1000;
constexpr double kMimicMafMin = 0.1;
constexpr double kMimicHweMin = 0.001;

Vector draw_errors(Index n, const ErrorLaw& law, std::uint64_t seed) {
  CounterRng rng(seed, kStreamError);
  Vector e(n);
  if (law.kind == ErrorLaw::Kind::normal) {
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < n; ++i) e[i] = law.scale * normal(rng);
  } else {
    boost::random::student_t_distribution<double> t(law.df);
    for (Index i = 0; i < n; ++i) e[i] = law.scale * t(rng);
  }
  return e;
}

IndexSet support_indices(const Vector& beta) {
  IndexSet s;
  for (Index j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) s.push_back(j);
  return s;
}

// Partial Fisher-Yates: k distinct draws from pool, in draw order.
std::vector<Index> draw_without_replacement(std::vector<Index> pool, std::size_t k, CounterRng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

double mean_of(const std::vector<double>& v) { return stats::mean(v); }

double se_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  return stats::sample_sd(v) / std::sqrt(static_cast<double>(v.size()));
}

}  // namespace

std::string to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::example1: return "example1";
    case DesignKind::example2: return "example2";
    case DesignKind::mimic: return "mimic";
  }
  return "";
}

DesignKind parse_design_kind(const std::string& text) {
  if (text == "1" || text == "example1") return DesignKind::example1;
  if (text == "2" || text == "example2") return DesignKind::example2;
  if (text == "mimic") return DesignKind::mimic;
  throw Error("unknown example '" + text + "' (expected 1, 2 or mimic)");
}

std::string to_string(const ErrorLaw& law) {
  if (law.kind == ErrorLaw::Kind::normal) return "normal(" + csv::format_double(law.scale) + ")";
  return "t(" + csv::format_double(law.df) + ")";
}

SimDesign SimDesign::example1(ErrorLaw error) {
  SimDesign d;
  d.kind = DesignKind::example1;
  d.n = 200;
  d.d = 1500;
  d.rho = 0.5;
  d.error = error;
  d.beta_true = Vector::Zero(d.d);
  d.beta_true.head(20).setOnes();
  return d;
}

SimDesign SimDesign::example2() {
  SimDesign d;
  d.kind = DesignKind::example2;
  d.n = 200;
  d.d = 1500;
  d.rho = 0.5;
  d.error = ErrorLaw::normal(1.0);
  d.beta_true = Vector::Zero(d.d);
  for (Index j : {10, 20, 30, 40, 50}) d.beta_true[j - 1] = 1.0;
  return d;
}

SimDesign SimDesign::mimic(double rho) {
  SimDesign d;
  d.kind = DesignKind::mimic;
  d.n = 250;
  d.d = 1502;
  d.rho = rho;
  d.error = ErrorLaw::normal(0.6);
  d.beta_true = Vector::Zero(d.d);
  d.beta_true.head(20).setOnes();
  return d;
}

void SimDesign::validate() const {
  if (n < 2) throw Error("simulation needs n >= 2");
  if (d < 1) throw Error("simulation needs d >= 1");
  if (!(std::abs(rho) < 1.0)) throw Error("rho must satisfy |rho| < 1");
  if (beta_true.size() != d) throw Error("beta_true must have length d");
  if (error.kind == ErrorLaw::Kind::normal && !(error.scale >= 0.0)) throw Error("error sd must be nonnegative");
  if (error.kind == ErrorLaw::Kind::student_t && !(error.df > 0.0)) throw Error("t degrees of freedom must be positive");
  if (kind == DesignKind::example2 && d < 1) throw Error("example 2 needs at least one feature");
  if (kind == DesignKind::mimic && d < 3) throw Error("mimic design needs age, sex and SNP columns");
}

Matrix gen_ar1_gaussian(Index n, Index d, double rho, std::uint64_t seed) {
  if (!(std::abs(rho) < 1.0)) throw Error("rho must satisfy |rho| < 1");
  if (n < 0 || d < 0) throw Error("dimensions must be nonnegative");
  CounterRng rng(seed, kStreamDesign);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  const double innovation = std::sqrt(1.0 - rho * rho);
  Matrix X(n, d);
  for (Index i = 0; i < n; ++i) {
    double z = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double e = normal(rng);
      z = j == 0 ? e : rho * z + innovation * e;
      X(i, j) = z;
    }
  }
  return X;
}

SimData gen_example1(const SimDesign& design, std::uint64_t seed) {
  if (design.kind != DesignKind::example1) throw Error("design is not example 1");
  design.validate();
  SimData out;
  out.ds.X = gen_ar1_gaussian(design.n, design.d, design.rho, seed);
  out.ds.y = out.ds.X * design.beta_true + draw_errors(design.n, design.error, seed);
  out.ds.feature_names = default_feature_names(design.d);
  out.ds.validate();
  out.beta_true = design.beta_true;
  out.prior_truth = support_indices(design.beta_true);
  return out;
}

SimData gen_example2(const SimDesign& design, std::uint64_t seed) {
  if (design.kind != DesignKind::example2) throw Error("design is not example 2");
  design.validate();
  SimData out;
  out.ds.X = gen_ar1_gaussian(design.n, design.d, design.rho, seed);
  for (Index i = 0; i < design.n; ++i) out.ds.X(i, 0) = stats::normal_cdf(out.ds.X(i, 0));
  const Vector e = draw_errors(design.n, design.error, seed);
  out.ds.y = out.ds.X * design.beta_true + out.ds.X.col(0).cwiseProduct(e);
  out.ds.feature_names = default_feature_names(design.d);
  out.ds.validate();
  out.beta_true = design.beta_true;
  // X1 drives the upper quantiles, so a perfect prior includes it.
  IndexSet truth = support_indices(design.beta_true);
  truth.push_back(0);
  out.prior_truth = make_index_set(std::move(truth));
  out.excluded = {0};
  return out;
}

SimData gen_mimic(const SimDesign& design, std::uint64_t seed) {
  if (design.kind != DesignKind::mimic) throw Error("design is not the mimic design");
  design.validate();
  const Index n = design.n;
  const Index snps = design.d - 2;
  Matrix X(n, design.d);
  {
    CounterRng rng(seed, kStreamCovariates);
    boost::random::normal_distribution<double> age(49.0, 10.0);
    boost::random::bernoulli_distribution<double> sex(0.5);
    for (Index i = 0; i < n; ++i) X(i, 0) = age(rng);
    for (Index i = 0; i < n; ++i) X(i, 1) = sex(rng) ? 1.0 : 0.0;
    const std::span<const double> a(X.col(0).data(), static_cast<std::size_t>(n));
    const double mu = stats::mean(a);
    const double sd = stats::sample_sd(a);
    X.col(0) = (X.col(0).array() - mu) / sd;
  }
  CounterRng maf_rng(seed, kStreamMaf);
  boost::random::uniform_real_distribution<double> maf_law(0.1, 0.5);
  const double innovation = std::sqrt(1.0 - design.rho * design.rho);
  Vector latent_prev = Vector::Zero(n);
  Vector latent(n);
  std::vector<double> dosage(static_cast<std::size_t>(n));
  for (Index k = 0; k < snps; ++k) {
    const double p = maf_law(maf_rng);
    const double t0 = (1.0 - p) * (1.0 - p);
    const double t1 = t0 + 2.0 * p * (1.0 - p);
    CounterRng rng(seed, kStreamSnp + static_cast<std::uint64_t>(k));
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxSnpAttempts && !accepted; ++attempt) {
      for (Index i = 0; i < n; ++i) {
        const double e = normal(rng);
        latent[i] = k == 0 ? e : design.rho * latent_prev[i] + innovation * e;
        const double u = stats::normal_cdf(latent[i]);
        dosage[static_cast<std::size_t>(i)] = u < t0 ? 0.0 : (u < t1 ? 1.0 : 2.0);
      }
      accepted = minor_allele_frequency(dosage) >= kMimicMafMin && hwe_pvalue(dosage) >= kMimicHweMin;
    }
    if (!accepted) throw Error("mimic SNP column could not be drawn to pass quality control");
    latent_prev = latent;
    for (Index i = 0; i < n; ++i) X(i, k + 2) = dosage[static_cast<std::size_t>(i)];
  }
  SimData out;
  out.ds.X = std::move(X);
  out.ds.y = out.ds.X * design.beta_true + draw_errors(n, design.error, seed);
  out.ds.feature_names = {"age", "sex"};
  std::vector<FeatureMeta> meta(2);
  for (Index k = 0; k < snps; ++k) {
    out.ds.feature_names.push_back("snp" + std::to_string(k + 1));
    meta.push_back({1 + (k * 22) / std::max<Index>(snps, 1), 10000 * (k + 1)});
  }
  out.ds.feature_meta = std::move(meta);
  out.ds.validate();
  out.beta_true = design.beta_true;
  out.prior_truth = support_indices(design.beta_true);
  return out;
}

SimData generate(const SimDesign& design, std::uint64_t seed) {
  switch (design.kind) {
    case DesignKind::example1: return gen_example1(design, seed);
    case DesignKind::example2: return gen_example2(design, seed);
    case DesignKind::mimic: return gen_mimic(design, seed);
  }
  throw Error("unknown design");
}

GenotypeMatrix genotypes_of(const Dataset& mimic) {
  if (mimic.d() < 3 || mimic.feature_names[0] != "age" || mimic.feature_names[1] != "sex")
    throw Error("not a mimic dataset");
  GenotypeMatrix gm;
  gm.G = mimic.X.rightCols(mimic.d() - 2);
  gm.snp_ids.assign(mimic.feature_names.begin() + 2, mimic.feature_names.end());
  if (mimic.feature_meta) gm.feature_meta.emplace(mimic.feature_meta->begin() + 2, mimic.feature_meta->end());
  return gm;
}

std::string to_string(ScenarioLabel label) {
  switch (label) {
    case ScenarioLabel::S1: return "S1";
    case ScenarioLabel::S2: return "S2";
    case ScenarioLabel::S3: return "S3";
    case ScenarioLabel::S4: return "S4";
  }
  return "";
}

ScenarioLabel parse_scenario(const std::string& text) {
  if (text == "S1") return ScenarioLabel::S1;
  if (text == "S2") return ScenarioLabel::S2;
  if (text == "S3") return ScenarioLabel::S3;
  if (text == "S4") return ScenarioLabel::S4;
  throw Error("unknown scenario '" + text + "' (expected S1, S2, S3 or S4)");
}

PriorScenario make_prior_scenario(ScenarioLabel label, const IndexSet& truth_in, Index d, std::uint64_t seed) {
  const IndexSet truth = make_index_set(truth_in);
  for (Index j : truth)
    if (j < 0 || j >= d) throw Error("true predictor index out of range");
  const auto s = truth.size();
  std::size_t n_true = 0;
  std::size_t n_false = 0;
  switch (label) {
    case ScenarioLabel::S1: n_true = s; break;
    case ScenarioLabel::S2: n_true = (s + 1) / 2; n_false = 2; break;
    case ScenarioLabel::S3: n_true = (s + 3) / 4; n_false = 15; break;
    case ScenarioLabel::S4: n_false = 20; break;
  }
  std::vector<Index> nulls;
  for (Index j = 0; j < d; ++j)
    if (!contains(truth, j)) nulls.push_back(j);
  if (nulls.size() < n_false)
    throw Error("scenario " + to_string(label) + " needs " + std::to_string(n_false) + " null features but only " +
                std::to_string(nulls.size()) + " exist");
  CounterRng rng(seed, kStreamScenario + static_cast<std::uint64_t>(label));
  std::vector<Index> chosen = draw_without_replacement(truth, n_true, rng);
  const std::vector<Index> wrong = draw_without_replacement(nulls, n_false, rng);
  chosen.insert(chosen.end(), wrong.begin(), wrong.end());
  return {label, make_index_set(std::move(chosen))};
}

PriorScenario make_prior_scenario(ScenarioLabel label, const Vector& beta_true, std::uint64_t seed) {
  return make_prior_scenario(label, support_indices(beta_true), beta_true.size(), seed);
}

std::string to_string(Method method) {
  switch (method) {
    case Method::kiqr: return "kiqr";
    case Method::trad_qr: return "trad_qr";
    case Method::prior_qr: return "prior_qr";
    case Method::gwas_qr: return "gwas_qr";
  }
  return "";
}

Method parse_method(const std::string& text) {
  if (text == "kiqr") return Method::kiqr;
  if (text == "trad" || text == "trad_qr") return Method::trad_qr;
  if (text == "prior" || text == "prior_qr") return Method::prior_qr;
  if (text == "gwas" || text == "gwas_qr") return Method::gwas_qr;
  throw Error("unknown method '" + text + "' (expected kiqr, trad, prior or gwas)");
}

double CellSummary::mean(const std::string& metric) const {
  for (const auto& [name, value] : stats)
    if (name == metric) return value.first;
  throw Error("unknown metric '" + metric + "'");
}

const CellSummary& ScenarioReport::cell(Method method, std::optional<ScenarioLabel> scenario, double tau) const {
  for (const auto& c : cells)
    if (c.method == method && c.scenario == scenario && c.tau == tau) return c;
  throw Error("no report cell for " + to_string(method) + (scenario ? " " + to_string(*scenario) : "") +
              " at tau " + csv::format_double(tau));
}

namespace {

using Clock = std::chrono::steady_clock;

void fill_from_fit(ReplicateRow& row, const Vector& slopes, const SimData& data) {
  row.metrics = selection_metrics(slopes, data.beta_true, data.excluded);
  row.x1_selected = slopes.size() > 0 && slopes[0] != 0.0;
}

std::vector<ReplicateRow> run_one_replicate(int r, const SimDesign& design, const std::vector<ScenarioLabel>& scenarios,
                                            const std::vector<Method>& methods, const std::vector<double>& taus,
                                            std::uint64_t seed, const ReplicationOptions& options) {
  const std::uint64_t rep_seed = seed ^ static_cast<std::uint64_t>(r);
  const SimData data = generate(design, rep_seed);
  const Index d = data.ds.d();
  std::vector<PriorScenario> priors;
  for (ScenarioLabel label : scenarios) priors.push_back(make_prior_scenario(label, data.prior_truth, d, rep_seed));
  const bool wants_prior = std::find(methods.begin(), methods.end(), Method::prior_qr) != methods.end();
  const bool wants_kiqr = std::find(methods.begin(), methods.end(), Method::kiqr) != methods.end();

  std::vector<ReplicateRow> rows;
  for (double tau : taus) {
    TuningSettings settings = options.settings;
    settings.tau = tau;
    // Prior-QR fits double as the KIQR step-1 fits.
    std::vector<std::optional<TuningResult>> step1(priors.size());
    std::vector<double> step1_ms(priors.size(), 0.0);
    if (wants_prior || wants_kiqr) {
      for (std::size_t s = 0; s < priors.size(); ++s) {
        const auto start = Clock::now();
        try {
          step1[s] = tune_prior_informed_qbic(data.ds, options.grid, settings, priors[s].prior_set);
        } catch (const Error&) {
        }
        step1_ms[s] = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      }
    }
    for (Method method : methods) {
      auto make_row = [&](std::optional<ScenarioLabel> label) {
        ReplicateRow row;
        row.replicate = r;
        row.method = method;
        row.scenario = label;
        row.tau = tau;
        return row;
      };
      auto finish = [&](ReplicateRow& row, Clock::time_point start, double extra_ms) {
        if (options.timings)
          row.runtime_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count() + extra_ms;
        rows.push_back(row);
      };
      switch (method) {
        case Method::trad_qr: {
          ReplicateRow row = make_row(std::nullopt);
          const auto start = Clock::now();
          try {
            const TuningResult t = tune_qbic(data.ds, options.grid, settings, std::nullopt);
            row.zeta = t.best_zeta;
            row.lambda = t.best_lambda;
            fill_from_fit(row, t.best_fit.beta.tail(d), data);
          } catch (const Error&) {
            row.failed = true;
          }
          finish(row, start, 0.0);
          break;
        }
        case Method::gwas_qr: {
          ReplicateRow row = make_row(std::nullopt);
          const auto start = Clock::now();
          try {
            const GwasScan scan = gwas_scan(data.ds, {}, GwasMethod::qr(tau), options.gwas_threshold);
            Vector slopes = Vector::Zero(d);
            for (Index j : scan.selected) slopes[j] = scan.results[static_cast<std::size_t>(j)].estimate;
            fill_from_fit(row, slopes, data);
          } catch (const Error&) {
            row.failed = true;
          }
          finish(row, start, 0.0);
          break;
        }
        case Method::prior_qr:
          for (std::size_t s = 0; s < priors.size(); ++s) {
            ReplicateRow row = make_row(priors[s].label);
            const auto start = Clock::now();
            if (step1[s]) {
              row.lambda = step1[s]->best_lambda;
              fill_from_fit(row, step1[s]->best_fit.beta.tail(d), data);
            } else {
              row.failed = true;
            }
            finish(row, start, step1_ms[s]);
          }
          break;
        case Method::kiqr:
          for (std::size_t s = 0; s < priors.size(); ++s) {
            ReplicateRow row = make_row(priors[s].label);
            const auto start = Clock::now();
            try {
              if (!step1[s]) throw Error("prior-informed step failed");
              const Vector preds = data.ds.X * step1[s]->best_fit.beta.tail(d) +
                                   Vector::Constant(data.ds.n(), step1[s]->best_fit.beta[0]);
              const TuningResult t = tune_qbic(data.ds, options.grid, settings, PriorKnowledge{PriorPredictions{preds}});
              row.zeta = t.best_zeta;
              row.lambda = t.best_lambda;
              fill_from_fit(row, t.best_fit.beta.tail(d), data);
            } catch (const Error&) {
              row.failed = true;
            }
            finish(row, start, step1_ms[s]);
          }
          break;
      }
    }
  }
  return rows;
}

}  // namespace

std::vector<CellSummary> summarize(const std::vector<ReplicateRow>& rows) {
  std::vector<CellSummary> cells;
  std::vector<std::map<std::string, std::vector<double>>> values;
  static const char* kMetrics[] = {"tp", "fp", "fn", "f1", "mse", "x1_selected", "runtime_ms"};
  for (const auto& row : rows) {
    std::size_t idx = 0;
    for (; idx < cells.size(); ++idx)
      if (cells[idx].method == row.method && cells[idx].scenario == row.scenario && cells[idx].tau == row.tau) break;
    if (idx == cells.size()) {
      CellSummary c;
      c.method = row.method;
      c.scenario = row.scenario;
      c.tau = row.tau;
      cells.push_back(c);
      values.emplace_back();
    }
    if (row.failed) {
      ++cells[idx].failures;
      continue;
    }
    ++cells[idx].count;
    auto& v = values[idx];
    v["tp"].push_back(static_cast<double>(row.metrics.tp));
    v["fp"].push_back(static_cast<double>(row.metrics.fp));
    v["fn"].push_back(static_cast<double>(row.metrics.fn));
    v["f1"].push_back(row.metrics.f1);
    v["mse"].push_back(row.metrics.mse);
    v["x1_selected"].push_back(row.x1_selected ? 1.0 : 0.0);
    v["runtime_ms"].push_back(row.runtime_ms);
  }
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (const char* m : kMetrics) {
      const auto& v = values[i][m];
      cells[i].stats.emplace_back(m, std::make_pair(v.empty() ? 0.0 : mean_of(v), se_of(v)));
    }
  return cells;
}

ScenarioReport run_replications(const SimDesign& design, const std::vector<ScenarioLabel>& scenarios,
                                const std::vector<Method>& methods, const std::vector<double>& taus, int reps,
                                std::uint64_t seed, const ReplicationOptions& options) {
  if (reps < 1) throw Error("reps must be at least 1");
  if (methods.empty()) throw Error("no methods requested");
  if (taus.empty()) throw Error("no quantile levels requested");
  for (double tau : taus) QuantileLevel{tau};
  design.validate();
  const bool needs_prior = std::any_of(methods.begin(), methods.end(),
                                       [](Method m) { return m == Method::kiqr || m == Method::prior_qr; });
  if (needs_prior && scenarios.empty()) throw Error("prior-based methods need at least one scenario");
  std::vector<std::vector<ReplicateRow>> per_rep(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
    per_rep[r] = run_one_replicate(static_cast<int>(r), design, scenarios, methods, taus, seed, options);
  });
  ScenarioReport report;
  report.design = design;
  report.scenarios = scenarios;
  report.methods = methods;
  report.taus = taus;
  report.reps = reps;
  report.seed = seed;
  report.gwas_threshold = options.gwas_threshold;
  for (auto& rows : per_rep) report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  report.cells = summarize(report.rows);
  return report;
}

void write_report_csv(std::ostream& out, const ScenarioReport& report) {
  out << "replicate,method,scenario,tau,zeta,lambda,tp,fp,fn,f1,mse,x1_selected,runtime_ms,failed\n";
  for (const auto& row : report.rows) {
    out << row.replicate << ',' << to_string(row.method) << ',' << (row.scenario ? to_string(*row.scenario) : "")
        << ',' << csv::format_double(row.tau) << ',' << csv::format_double(row.zeta) << ','
        << csv::format_double(row.lambda) << ',' << row.metrics.tp << ',' << row.metrics.fp << ','
        << row.metrics.fn << ',' << csv::format_double(row.metrics.f1) << ',' << csv::format_double(row.metrics.mse)
        << ',' << (row.x1_selected ? 1 : 0) << ',' << csv::format_double(row.runtime_ms) << ','
        << (row.failed ? 1 : 0) << '\n';
  }
}

void write_aggregate_json(std::ostream& out, const ScenarioReport& report) {
  nlohmann::ordered_json j;
  j["design"] = {{"kind", to_string(report.design.kind)},
                 {"n", report.design.n},
                 {"d", report.design.d},
                 {"rho", report.design.rho},
                 {"error", to_string(report.design.error)}};
  j["reps"] = report.reps;
  j["seed"] = report.seed;
  j["taus"] = report.taus;
  std::vector<std::string> methods;
  for (Method m : report.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  std::vector<std::string> scenarios;
  for (ScenarioLabel s : report.scenarios) scenarios.push_back(to_string(s));
  j["scenarios"] = scenarios;
  j["gwas_threshold"] = report.gwas_threshold;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    nlohmann::ordered_json cell;
    cell["method"] = to_string(c.method);
    cell["scenario"] = c.scenario ? nlohmann::ordered_json(to_string(*c.scenario)) : nlohmann::ordered_json(nullptr);
    cell["tau"] = c.tau;
    cell["count"] = c.count;
    cell["failures"] = c.failures;
    nlohmann::ordered_json mean;
    nlohmann::ordered_json se;
    for (const auto& [name, value] : c.stats) {
      mean[name] = value.first;
      se[name] = value.second;
    }
    cell["mean"] = mean;
    cell["se"] = se;
    cells.push_back(cell);
  }
  j["cells"] = cells;
  out << j.dump(2) << '\n';
}

}  // namespace kiqr
