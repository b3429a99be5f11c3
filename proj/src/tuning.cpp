#include "kiqr/tuning.hpp"

#include "kiqr/parallel.hpp"
#include "kiqr/rng.hpp"
#include "kiqr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace kiqr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One lambda path at fixed zeta: quantile-LASSO initial fits chained by warm
// starts, each followed by the LLA refits at the same lambda.
struct PathFits {
  std::vector<std::optional<FitResult>> fits;
  std::vector<bool> failed;
};

PathFits run_path(const Problem& problem, const TuningSettings& s, double zeta, const Vector* prior,
                  const std::vector<double>& lambdas, Index max_support) {
  const QuantileLevel tau(s.tau);
  const SmoothingParam gamma(s.gamma);
  const Vector* used_prior = zeta > 0.0 ? prior : nullptr;
  PathFits out;
  out.fits.resize(lambdas.size());
  out.failed.assign(lambdas.size(), false);
  // previous[p]: pass p + 1 at the previous lambda, the warm start for the
  // same pass at the next lambda.
  std::vector<Vector> previous;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    try {
      const ScadParams scad(lambdas[k], s.scad_a);
      std::vector<Vector> passes;
      FitResult current = problem.lasso(tau, gamma, lambdas[k], s.control, previous.empty() ? nullptr : &previous[0]);
      passes.push_back(current.beta_standardized);
      for (int pass = 2; pass <= s.lla_passes; ++pass) {
        const PenaltyWeights w = lla_weights(current.beta_standardized.tail(problem.d()), scad);
        const auto idx = static_cast<std::size_t>(pass - 1);
        const Vector& start = idx < previous.size() ? previous[idx] : current.beta_standardized;
        current = problem.descend(tau, gamma, zeta, used_prior, w, &start, s.control);
        passes.push_back(current.beta_standardized);
      }
      previous = std::move(passes);
      const bool too_big = max_support > 0 && static_cast<Index>(current.support.size()) > max_support;
      out.fits[k] = std::move(current);
      if (too_big) break;
    } catch (const Error&) {
      out.failed[k] = true;
    }
  }
  return out;
}

// Lowest score; ties toward larger lambda, then smaller zeta.
bool better(const TuningCell& a, const TuningCell& b) {
  if (a.score != b.score) return a.score < b.score;
  if (a.lambda != b.lambda) return a.lambda > b.lambda;
  return a.zeta < b.zeta;
}

std::optional<std::size_t> argbest(const std::vector<TuningCell>& cells) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (!c.evaluated || c.failed || !(c.score < kInf)) continue;
    if (!best || better(c, cells[*best])) best = i;
  }
  return best;
}

std::vector<std::vector<double>> lambda_paths(const Problem& problem, const TuningGrid& grid,
                                              const TuningSettings& s, const std::vector<double>& zetas,
                                              const Vector* prior) {
  std::vector<std::vector<double>> paths(zetas.size());
  if (!grid.lambda_values.empty()) {
    for (std::size_t z = 0; z < zetas.size(); ++z)
      paths[z] = grid.lambda_values.size() == 1 ? grid.lambda_values[0] : grid.lambda_values.at(z);
    return paths;
  }
  const QuantileLevel tau(s.tau);
  const SmoothingParam gamma(s.gamma);
  parallel_for(zetas.size(), [&](std::size_t z) {
    // zeta = 1 has no lambda_max (the penalty vanishes); lambda then only
    // drives the initial fit, so it shares the zeta = 0 anchor.
    const double zeta = zetas[z] < 1.0 ? zetas[z] : 0.0;
    const double top = problem.lambda_max(tau, gamma, zeta, zeta > 0.0 ? prior : nullptr, s.control);
    paths[z] = geometric_path(top, grid.lambda_min_ratio, grid.n_lambda);
  });
  return paths;
}

double held_out_check_loss(const Dataset& test, const FitResult& fit, double tau) {
  const double sum = check_loss_sum(fit.beta, test.X, test.y, QuantileLevel(tau));
  return sum / static_cast<double>(test.n());
}

}  // namespace

std::string to_string(SelectionRule rule) { return rule == SelectionRule::minimum ? "minimum" : "one_se"; }
std::string to_string(Criterion criterion) { return criterion == Criterion::qbic ? "qbic" : "cv"; }

void TuningGrid::validate() const {
  if (zeta_values.empty() && !include_zeta_one) throw Error("zeta grid is empty");
  for (std::size_t i = 0; i < zeta_values.size(); ++i) {
    if (!(zeta_values[i] >= 0.0 && zeta_values[i] <= 1.0)) throw Error("zeta grid values must lie in [0, 1]");
    if (i > 0 && !(zeta_values[i] > zeta_values[i - 1])) throw Error("zeta grid must be strictly ascending");
  }
  if (lambda_values.empty()) {
    if (n_lambda < 1) throw Error("lambda grid needs at least one value");
    if (!(lambda_min_ratio > 0.0 && lambda_min_ratio <= 1.0)) throw Error("lambda_min_ratio must lie in (0, 1]");
  } else {
    if (lambda_values.size() != 1 && lambda_values.size() != zetas().size())
      throw Error("explicit lambda paths must be one shared path or one per zeta");
    for (const auto& path : lambda_values) {
      if (path.empty()) throw Error("lambda path is empty");
      for (std::size_t i = 0; i < path.size(); ++i) {
        if (!(path[i] > 0.0)) throw Error("lambda values must be positive");
        if (i > 0 && !(path[i] < path[i - 1])) throw Error("lambda paths must be strictly descending");
      }
    }
  }
  if (max_support < 0 && max_support != kAutoSupport) throw Error("max_support must be nonnegative");
}

std::vector<double> TuningGrid::zetas() const {
  std::vector<double> z = zeta_values;
  if (include_zeta_one && (z.empty() || z.back() < 1.0)) z.push_back(1.0);
  return z;
}

FitConfig TuningSettings::config(double zeta, double lambda) const {
  FitConfig c(tau, lambda, zeta);
  c.gamma = SmoothingParam(gamma);
  c.scad = ScadParams(lambda, scad_a);
  c.lla_passes = lla_passes;
  c.tol = control.tol;
  c.max_sweeps = control.max_sweeps;
  return c;
}

double qbic_value(double check_loss_sum, Index nu, Index n, Index d) {
  if (n < 3) throw Error("QBIC needs n >= 3");
  if (d < 2) throw Error("QBIC needs d >= 2");
  if (!(check_loss_sum > 0.0)) {
    warn("QBIC: zero check-loss sum (perfect interpolation); score set to -inf");
    return -kInf;
  }
  const double nn = static_cast<double>(n);
  return std::log(check_loss_sum) +
         static_cast<double>(nu) * std::log(static_cast<double>(d)) * std::log(std::log(nn)) / (2.0 * nn);
}

double qbic(const Dataset& ds, const FitResult& fit, double tau) {
  const double sum = check_loss_sum(fit.beta, ds.X, ds.y, QuantileLevel(tau));
  return qbic_value(sum, static_cast<Index>(fit.support.size()), ds.n(), ds.d());
}

double lambda_max(const Dataset& ds, double tau, double gamma, double zeta, const Vector* prior_predictions) {
  return Problem(ds).lambda_max(QuantileLevel(tau), SmoothingParam(gamma), zeta, prior_predictions);
}

std::vector<double> geometric_path(double top, double ratio, int count) {
  if (count < 1) throw Error("path needs at least one value");
  if (!(top > 0.0)) throw Error("path anchor must be positive");
  std::vector<double> path(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    path[static_cast<std::size_t>(k)] = top * std::pow(ratio, t);
  }
  return path;
}

TuningResult tune_prior_informed_qbic(const Dataset& ds, const TuningGrid& grid, const TuningSettings& settings,
                                      const IndexSet& prior_set) {
  const Problem problem(ds);
  const QuantileLevel tau(settings.tau);
  const SmoothingParam gamma(settings.gamma);
  const IndexSet sp = make_index_set(prior_set);
  std::vector<double> lambdas;
  if (!grid.lambda_values.empty())
    lambdas = grid.lambda_values.front();
  else
    lambdas = geometric_path(problem.lambda_max(tau, gamma, 0.0, nullptr, settings.control), grid.lambda_min_ratio,
                             grid.n_lambda);
  TuningResult result;
  result.criterion = Criterion::qbic;
  result.score_table.resize(lambdas.size());
  Vector warm;
  bool have_warm = false;
  std::optional<FitResult> best_fit;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    TuningCell& cell = result.score_table[k];
    cell.zeta = 0.0;
    cell.lambda = lambdas[k];
    cell.score = kInf;
    try {
      if (static_cast<Index>(sp.size()) >= problem.n())
        throw Error("unpenalized fit underdetermined: prior set has at least n features");
      const PenaltyWeights w0 = mask_weights(l1_weights(problem.d(), lambdas[k]), sp);
      const FitResult first = problem.descend(tau, gamma, 0.0, nullptr, w0, have_warm ? &warm : nullptr,
                                              settings.control);
      warm = first.beta_standardized;
      have_warm = true;
      FitResult fit = problem.lla_refits(first, tau, gamma, 0.0, nullptr, ScadParams(lambdas[k], settings.scad_a),
                                         settings.lla_passes, settings.control, sp);
      cell.evaluated = true;
      cell.support_size = static_cast<Index>(fit.support.size());
      cell.score = qbic(ds, fit, settings.tau);
      const Index cap = grid.support_cap(problem.n());
      const bool too_big = cap > 0 && cell.support_size > cap;
      const auto current_best = argbest(result.score_table);
      if (current_best && *current_best == k) best_fit = std::move(fit);
      if (too_big) break;
    } catch (const Error&) {
      cell.evaluated = true;
      cell.failed = true;
      cell.score = kInf;
    }
  }
  const auto best = argbest(result.score_table);
  if (!best || !best_fit) throw Error("prior-informed tuning: every fit failed");
  result.best_zeta = 0.0;
  result.best_lambda = result.score_table[*best].lambda;
  result.best_fit = std::move(*best_fit);
  return result;
}

Vector resolve_prior_for_tuning(const Problem& problem, const TuningGrid& grid, const TuningSettings& settings,
                                const PriorKnowledge& prior) {
  if (const auto* set = std::get_if<PriorSet>(&prior)) {
    const TuningResult step1 = tune_prior_informed_qbic(problem.original(), grid, settings, set->features);
    return problem.predict(step1.best_fit.beta);
  }
  return problem.prior_predictions(settings.config(0.0, 0.0), prior);
}

TuningResult tune_qbic(const Dataset& ds, const TuningGrid& grid, const TuningSettings& settings,
                       const std::optional<PriorKnowledge>& prior) {
  grid.validate();
  const Problem problem(ds);
  std::optional<Vector> preds;
  if (prior) preds = resolve_prior_for_tuning(problem, grid, settings, *prior);
  const std::vector<double> zetas = preds ? grid.zetas() : std::vector<double>{0.0};
  const Vector* prior_ptr = preds ? &*preds : nullptr;
  if (preds && ds.d() >= ds.n() && zetas.back() == 1.0)
    warn("zeta = 1 is on the grid; the penalty vanishes there and d >= n");
  const auto paths = lambda_paths(problem, grid, settings, zetas, prior_ptr);

  struct PathScore {
    std::vector<TuningCell> cells;
    std::optional<FitResult> best;
  };
  std::vector<PathScore> scored(zetas.size());
  parallel_for(zetas.size(), [&](std::size_t z) {
    const PathFits fits = run_path(problem, settings, zetas[z], prior_ptr, paths[z], grid.support_cap(problem.n()));
    PathScore& ps = scored[z];
    ps.cells.resize(paths[z].size());
    for (std::size_t k = 0; k < paths[z].size(); ++k) {
      TuningCell& c = ps.cells[k];
      c.zeta = zetas[z];
      c.lambda = paths[z][k];
      c.score = kInf;
      c.failed = fits.failed[k];
      c.evaluated = fits.failed[k] || fits.fits[k].has_value();
      if (!fits.fits[k]) continue;
      c.support_size = static_cast<Index>(fits.fits[k]->support.size());
      c.score = qbic(ds, *fits.fits[k], settings.tau);
    }
    if (const auto b = argbest(ps.cells)) ps.best = fits.fits[*b];
  });

  TuningResult result;
  result.criterion = Criterion::qbic;
  result.rule = SelectionRule::minimum;
  for (const auto& ps : scored) result.score_table.insert(result.score_table.end(), ps.cells.begin(), ps.cells.end());
  const auto best = argbest(result.score_table);
  if (!best) throw Error("QBIC tuning: every fit failed");
  result.best_zeta = result.score_table[*best].zeta;
  result.best_lambda = result.score_table[*best].lambda;
  for (std::size_t z = 0; z < zetas.size(); ++z)
    if (zetas[z] == result.best_zeta) result.best_fit = *scored[z].best;
  result.prior_predictions = preds;
  return result;
}

std::vector<int> fold_assignment(Index n, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error("cross-validation needs at least 2 folds");
  if (n < static_cast<Index>(folds)) throw Error("more folds than observations");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  CounterRng rng(seed, 0xcf01d5ULL);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    labels[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos % static_cast<std::size_t>(folds));
  return labels;
}

TuningResult tune_cv(const Dataset& ds, const TuningGrid& grid, const TuningSettings& settings,
                     const std::optional<PriorKnowledge>& prior, std::uint64_t seed) {
  return tune_cv_with_folds(ds, grid, settings, prior, fold_assignment(ds.n(), grid.folds, seed));
}

TuningResult tune_cv_with_folds(const Dataset& ds, const TuningGrid& grid, const TuningSettings& settings,
                                const std::optional<PriorKnowledge>& prior, const std::vector<int>& folds) {
  grid.validate();
  if (static_cast<Index>(folds.size()) != ds.n()) throw Error("fold labels must cover every observation");
  const int k_folds = folds.empty() ? 0 : *std::max_element(folds.begin(), folds.end()) + 1;
  if (k_folds < 2) throw Error("cross-validation needs at least 2 folds");
  std::vector<std::vector<Index>> test_rows(static_cast<std::size_t>(k_folds));
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (folds[i] < 0) throw Error("fold labels must be nonnegative");
    test_rows[static_cast<std::size_t>(folds[i])].push_back(static_cast<Index>(i));
  }
  for (const auto& rows : test_rows)
    if (rows.empty()) throw Error("every fold needs at least one observation");

  const Problem full(ds);
  std::optional<Vector> full_preds;
  if (prior) full_preds = resolve_prior_for_tuning(full, grid, settings, *prior);
  const std::vector<double> zetas = full_preds ? grid.zetas() : std::vector<double>{0.0};
  const auto paths = lambda_paths(full, grid, settings, zetas, full_preds ? &*full_preds : nullptr);

  // scores[fold][zeta][lambda]
  std::vector<std::vector<std::vector<double>>> scores(
      static_cast<std::size_t>(k_folds), std::vector<std::vector<double>>(zetas.size()));
  std::vector<std::vector<std::vector<bool>>> failed(
      static_cast<std::size_t>(k_folds), std::vector<std::vector<bool>>(zetas.size()));

  parallel_for(static_cast<std::size_t>(k_folds), [&](std::size_t f) {
    std::vector<Index> train_rows;
    for (std::size_t i = 0; i < folds.size(); ++i)
      if (folds[i] != static_cast<int>(f)) train_rows.push_back(static_cast<Index>(i));
    const Dataset train = ds.subset_rows(train_rows);
    const Dataset test = ds.subset_rows(test_rows[f]);
    const Problem problem(train);
    std::optional<Vector> preds;
    if (prior) {
      if (const auto* p = std::get_if<PriorPredictions>(&*prior)) {
        Vector sub(static_cast<Index>(train_rows.size()));
        for (std::size_t r = 0; r < train_rows.size(); ++r) sub[static_cast<Index>(r)] = p->values[train_rows[r]];
        preds = std::move(sub);
      } else {
        preds = resolve_prior_for_tuning(problem, grid, settings, *prior);
      }
    }
    for (std::size_t z = 0; z < zetas.size(); ++z) {
      const PathFits fits =
          run_path(problem, settings, zetas[z], preds ? &*preds : nullptr, paths[z], grid.support_cap(problem.n()));
      auto& s = scores[f][z];
      auto& fl = failed[f][z];
      s.assign(paths[z].size(), kInf);
      fl.assign(paths[z].size(), false);
      for (std::size_t k = 0; k < paths[z].size(); ++k) {
        fl[k] = fits.failed[k];
        if (fits.fits[k]) s[k] = held_out_check_loss(test, *fits.fits[k], settings.tau);
      }
    }
  });

  TuningResult result;
  result.criterion = Criterion::cv;
  result.rule = grid.rule;
  for (std::size_t z = 0; z < zetas.size(); ++z) {
    for (std::size_t k = 0; k < paths[z].size(); ++k) {
      TuningCell c;
      c.zeta = zetas[z];
      c.lambda = paths[z][k];
      std::vector<double> per_fold;
      bool any_failed = false;
      bool complete = true;
      for (int f = 0; f < k_folds; ++f) {
        any_failed = any_failed || failed[static_cast<std::size_t>(f)][z][k];
        const double v = scores[static_cast<std::size_t>(f)][z][k];
        if (!(v < kInf)) complete = false;
        per_fold.push_back(v);
      }
      c.failed = any_failed;
      c.evaluated = complete || any_failed;
      if (complete && !any_failed) {
        c.score = stats::mean(per_fold);
        c.std_error = stats::sample_sd(per_fold) / std::sqrt(static_cast<double>(k_folds));
      } else {
        c.score = kInf;
      }
      result.score_table.push_back(c);
    }
  }

  std::optional<std::size_t> chosen;
  if (grid.rule == SelectionRule::minimum) {
    chosen = argbest(result.score_table);
  } else {
    std::size_t offset = 0;
    std::vector<TuningCell> per_zeta;
    std::vector<std::size_t> per_zeta_index;
    for (std::size_t z = 0; z < zetas.size(); ++z) {
      const std::vector<TuningCell> cells(result.score_table.begin() + static_cast<std::ptrdiff_t>(offset),
                                          result.score_table.begin() +
                                              static_cast<std::ptrdiff_t>(offset + paths[z].size()));
      if (const auto m = argbest(cells)) {
        const double limit = cells[*m].score + cells[*m].std_error;
        // Largest lambda (paths are descending) within one standard error.
        for (std::size_t k = 0; k < cells.size(); ++k) {
          if (cells[k].evaluated && !cells[k].failed && cells[k].score <= limit) {
            per_zeta.push_back(cells[k]);
            per_zeta_index.push_back(offset + k);
            break;
          }
        }
      }
      offset += paths[z].size();
    }
    if (const auto b = argbest(per_zeta)) chosen = per_zeta_index[*b];
  }
  if (!chosen) throw Error("cross-validation tuning: every fit failed");
  result.best_zeta = result.score_table[*chosen].zeta;
  result.best_lambda = result.score_table[*chosen].lambda;

  const FitConfig config = settings.config(result.best_zeta, result.best_lambda);
  result.best_fit = full.kiqr(config, full_preds ? *full_preds : Vector::Zero(ds.n()));
  result.prior_predictions = full_preds;
  return result;
}

}  // namespace kiqr
