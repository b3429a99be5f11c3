#include "kiqr/cli.hpp"
#include "kiqr/csv.hpp"
#include "kiqr/parallel.hpp"
#include "kiqr/solver.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <fstream>

namespace kiqr {
namespace {

using testing::slurp;
using testing::TempDir;

int run(std::vector<std::string> args) { return cli::run(args); }

nlohmann::json read_json(const std::filesystem::path& p) { return nlohmann::json::parse(slurp(p)); }

std::string small_data(const TempDir& dir) {
  const Dataset ds = testing::sparse_linear(50, 12, 3, 1.0, 0.5, 1);
  const auto path = (dir / "data.csv").string();
  write_csv(ds, path);
  return path;
}

TEST(CliFit, ZetaZeroMatchesLibrary) {
  TempDir dir;
  const auto data = small_data(dir);
  ASSERT_EQ(run({"fit", "--data", data, "--tau", "0.5", "--zeta", "0", "--lambda", "0.05", "--out",
                 (dir / "out").string()}),
            0);
  const Dataset ds = load_csv(data, "y");
  FitConfig config(0.5, 0.05, 0.0);
  const FitResult fit = Problem(ds).kiqr(config, Vector::Zero(ds.n()));
  const csv::Table t = csv::read((dir / "out" / "coefficients.csv").string());
  ASSERT_EQ(t.header, (std::vector<std::string>{"feature", "beta"}));
  ASSERT_EQ(t.rows.size(), 13u);
  EXPECT_EQ(t.rows[0][0], "(intercept)");
  for (std::size_t j = 0; j < 13; ++j) EXPECT_EQ(t.rows[j][1], csv::format_double(fit.beta[static_cast<Index>(j)]));
  const auto doc = read_json(dir / "out" / "fit.json");
  EXPECT_EQ(doc["support"].size(), fit.support.size());
  EXPECT_EQ(doc["manifest"]["command"], "fit");
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "manifest.json"));
}

TEST(CliFit, PriorErrors) {
  TempDir dir;
  const auto data = small_data(dir);
  const auto prior = dir.write("prior.txt", "x1\nnot_a_feature\n");
  const auto coefs = dir.write("coefs.csv", "feature,beta\nx1,1\n");
  const auto out = (dir / "o").string();
  EXPECT_EQ(run({"fit", "--data", data, "--tau", "0.5", "--lambda", "0.1", "--prior-set", prior, "--out", out}), 1);
  EXPECT_EQ(run({"fit", "--data", data, "--tau", "0.5", "--lambda", "0.1", "--prior-set", prior, "--prior-coefs",
                 coefs, "--out", out}),
            1);
  EXPECT_EQ(run({"fit", "--data", data, "--tau", "1.5", "--lambda", "0.1", "--out", out}), 1);
  EXPECT_NE(run({"fit", "--data", data, "--tau", "0.5", "--bogus", "--out", out}), 0);
  EXPECT_NE(run({"nonsense"}), 0);
}

TEST(CliFit, PriorCoefficientsFile) {
  TempDir dir;
  const auto data = small_data(dir);
  const auto coefs = dir.write("coefs.csv", "feature,beta\n(intercept),0.1\nx1,1\nx2,1\nx3,1\n");
  ASSERT_EQ(run({"fit", "--data", data, "--tau", "0.5", "--zeta", "0.5", "--lambda", "0.05", "--prior-coefs", coefs,
                 "--out", (dir / "o").string()}),
            0);
  const Dataset ds = load_csv(data, "y");
  Vector beta_p = Vector::Zero(13);
  beta_p << 0.1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0;
  const FitResult fit = fit_kiqr(ds, FitConfig(0.5, 0.05, 0.5), PriorCoefficients{beta_p});
  const csv::Table t = csv::read((dir / "o" / "coefficients.csv").string());
  EXPECT_EQ(t.rows[1][1], csv::format_double(fit.beta[1]));
}

TEST(CliTune, QbicTableIsComplete) {
  TempDir dir;
  const auto data = small_data(dir);
  const auto prior = dir.write("prior.txt", "x1\nx2\n");
  ASSERT_EQ(run({"tune", "--data", data, "--tau", "0.5", "--prior-set", prior, "--n-lambda", "6", "--zetas",
                 "0,0.5,0.9", "--out", (dir / "o").string()}),
            0);
  const auto doc = read_json(dir / "o" / "fit.json");
  EXPECT_EQ(doc["tuning"]["criterion"], "qbic");
  EXPECT_EQ(doc["tuning"]["table"].size(), 18u);
}

TEST(CliTune, CrossValidation) {
  TempDir dir;
  const auto data = small_data(dir);
  ASSERT_EQ(run({"fit", "--data", data, "--tau", "0.7", "--tune", "cv", "--folds", "4", "--rule", "one_se",
                 "--n-lambda", "5", "--seed", "3", "--out", (dir / "o").string()}),
            0);
  const auto doc = read_json(dir / "o" / "fit.json");
  EXPECT_EQ(doc["tuning"]["criterion"], "cv");
  EXPECT_EQ(doc["tuning"]["rule"], "one_se");
}

TEST(CliConfig, FlagsTakePrecedence) {
  TempDir dir;
  const auto data = small_data(dir);
  const auto cfg = dir.write("run.cfg", "# comment\ntau = 0.8\nlambda=0.07\n");
  ASSERT_EQ(run({"fit", "--data", data, "--config", cfg, "--tau", "0.3", "--out", (dir / "o").string()}), 0);
  const auto doc = read_json(dir / "o" / "fit.json");
  EXPECT_EQ(doc["tau"], 0.3);
  EXPECT_EQ(doc["lambda"], 0.07);
  const auto merged = cli::merge_config({"--tau", "0.3"}, cfg, {});
  EXPECT_EQ(merged, (std::vector<std::string>{"--tau", "0.3", "--lambda", "0.07"}));
  EXPECT_THROW(cli::merge_config({}, dir.write("bad.cfg", "novalue\n"), {}), Error);
}

TEST(CliSimulate, SeededRunsAreByteIdenticalAcrossThreads) {
  TempDir dir;
  const std::vector<std::string> base{"simulate", "--example", "1", "--reps", "2", "--seed", "7", "--n", "60",
                                      "--d", "50", "--n-lambda", "6", "--zetas", "0,0.5"};
  auto with = [&](const std::string& out, const std::string& threads) {
    auto a = base;
    a.insert(a.end(), {"--out", (dir / out).string(), "--threads", threads});
    return a;
  };
  ASSERT_EQ(run(with("a", "1")), 0);
  ASSERT_EQ(run(with("b", "3")), 0);
  for (const char* f : {"replicates.csv", "aggregate.json"}) EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  set_thread_count(0);
  const csv::Table t = csv::read((dir / "a" / "replicates.csv").string());
  EXPECT_GE(t.column("x1_selected"), 0);
  EXPECT_GE(t.column("runtime_ms"), 0);
}

TEST(CliSimulate, GwasThresholdRecorded) {
  TempDir dir;
  ASSERT_EQ(run({"simulate", "--example", "mimic", "--methods", "gwas", "--reps", "1", "--d", "202", "--out",
                 (dir / "o").string()}),
            0);
  const auto manifest = read_json(dir / "o" / "manifest.json");
  EXPECT_EQ(manifest["config"]["gwas_threshold"], 5e-8);
  const csv::Table t = csv::read((dir / "o" / "replicates.csv").string());
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][static_cast<std::size_t>(t.column("method"))], "gwas_qr");
  EXPECT_NE(run({"simulate", "--example", "mimic", "--methods", "lasso", "--out", (dir / "x").string()}), 0);
}

TEST(CliGwas, ThresholdOneAndManhattanColumns) {
  TempDir dir;
  const auto data = small_data(dir);
  ASSERT_EQ(run({"gwas", "--data", data, "--covariates", "x1", "--method", "qr", "--tau", "0.5", "--threshold",
                 "1.0", "--out", (dir / "o").string()}),
            0);
  const csv::Table t = csv::read((dir / "o" / "manhattan.csv").string());
  EXPECT_EQ(t.rows.size(), 11u);
  const auto sel = static_cast<std::size_t>(t.column("selected"));
  const auto p = static_cast<std::size_t>(t.column("p_value"));
  const auto nl = static_cast<std::size_t>(t.column("neg_log10_p"));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    EXPECT_EQ(t.rows[r][sel], "1");
    EXPECT_NEAR(csv::parse_number(t, r, nl), -std::log10(csv::parse_number(t, r, p)), 1e-9);
  }
  EXPECT_EQ(run({"gwas", "--data", data, "--method", "qr", "--out", (dir / "q").string()}), 1);
}

TEST(CliGwas, HighlightFromFit) {
  TempDir dir;
  const auto data = small_data(dir);
  ASSERT_EQ(run({"fit", "--data", data, "--tau", "0.5", "--lambda", "0.1", "--out", (dir / "f").string()}), 0);
  ASSERT_EQ(run({"gwas", "--data", data, "--highlight", (dir / "f" / "fit.json").string(), "--out",
                 (dir / "o").string()}),
            0);
  const csv::Table t = csv::read((dir / "o" / "manhattan.csv").string());
  EXPECT_GE(t.column("highlighted"), 0);
}

TEST(CliQc, MimicGenotypesPassAndSummaryComplete) {
  TempDir dir;
  ASSERT_EQ(run({"simulate", "--example", "mimic", "--d", "302", "--data-only", "--out", (dir / "sim").string()}), 0);
  const auto geno = (dir / "sim" / "genotypes.csv").string();
  ASSERT_EQ(run({"qc", "--genotypes", geno, "--out", (dir / "qc").string()}), 0);
  const csv::Table summary = csv::read((dir / "qc" / "qc_summary.csv").string());
  ASSERT_EQ(summary.rows.size(), 300u);
  int kept = 0;
  for (const auto& row : summary.rows) kept += row[4] == "1";
  EXPECT_GE(kept, 285);

  std::vector<std::string> warnings;
  set_warning_handler([&](const std::string& m) { warnings.push_back(m); });
  const int rc = run({"qc", "--genotypes", geno, "--top-k", "1000", "--phenotypes",
                      (dir / "sim" / "phenotypes.csv").string(), "--covariates", "age,sex", "--out",
                      (dir / "qc2").string()});
  set_warning_handler([](const std::string& m) { std::fprintf(stderr, "warning: %s\n", m.c_str()); });
  ASSERT_EQ(rc, 0);
  EXPECT_EQ(warnings.size(), 1u);
  const csv::Table s2 = csv::read((dir / "qc2" / "qc_summary.csv").string());
  int kept2 = 0;
  for (const auto& row : s2.rows) kept2 += row[4] == "1";
  EXPECT_EQ(kept2, kept);
  ASSERT_EQ(run({"qc", "--genotypes", geno, "--top-k", "10", "--phenotypes", (dir / "sim" / "phenotypes.csv").string(),
                 "--out", (dir / "qc3").string()}),
            0);
  EXPECT_EQ(load_genotype_csv((dir / "qc3" / "genotypes_qc.csv").string()).m(), 10);
}

TEST(CliReport, SummarizesReplicates) {
  TempDir dir;
  ASSERT_EQ(run({"simulate", "--example", "1", "--reps", "2", "--n", "50", "--d", "40", "--n-lambda", "5", "--zetas",
                 "0,0.5", "--scenarios", "S1", "--out", (dir / "s").string()}),
            0);
  ASSERT_EQ(run({"report", "--replicates", (dir / "s" / "replicates.csv").string(), "--out", (dir / "r").string()}), 0);
  const auto summary = read_json(dir / "r" / "summary.json");
  const auto aggregate = read_json(dir / "s" / "aggregate.json");
  EXPECT_EQ(summary["cells"].size(), aggregate["cells"].size());
  const csv::Table bars = csv::read((dir / "r" / "f1_bars.csv").string());
  EXPECT_EQ(bars.rows.size(), summary["cells"].size());
}

TEST(CliRerun, ReproducesAndChecksDigests) {
  TempDir dir;
  const auto data = small_data(dir);
  const auto out = (dir / "o").string();
  ASSERT_EQ(run({"tune", "--data", data, "--tau", "0.5", "--n-lambda", "5", "--out", out}), 0);
  const std::string coefs = slurp(dir / "o" / "coefficients.csv");
  const std::string fit = slurp(dir / "o" / "fit.json");
  std::filesystem::copy_file(dir / "o" / "manifest.json", dir / "saved.json");
  std::filesystem::remove_all(dir / "o");
  ASSERT_EQ(run({"rerun", (dir / "saved.json").string()}), 0);
  EXPECT_EQ(slurp(dir / "o" / "coefficients.csv"), coefs);
  EXPECT_EQ(slurp(dir / "o" / "fit.json"), fit);
  // fit.json embeds the manifest, so it works as a rerun source too.
  ASSERT_EQ(run({"rerun", (dir / "o" / "fit.json").string(), "--out", (dir / "p").string()}), 0);
  EXPECT_EQ(slurp(dir / "p" / "coefficients.csv"), coefs);
  std::ofstream(data, std::ios::app) << "1,1,1,1,1,1,1,1,1,1,1,1,1\n";
  EXPECT_EQ(run({"rerun", (dir / "saved.json").string()}), 1);
}

TEST(CliBinary, ExitCodes) {
  const std::string tool = KIQR_TOOL;
  EXPECT_EQ(std::system((tool + " --help > /dev/null").c_str()), 0);
  EXPECT_NE(std::system((tool + " fit --data /nonexistent.csv --tau 0.5 --lambda 1 2> /dev/null").c_str()), 0);
}

}  // namespace
}  // namespace kiqr
