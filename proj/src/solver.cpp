#include "kiqr/solver.hpp"

#include "kiqr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace kiqr {

namespace {

constexpr int kResidualRefreshSweeps = 1000;
constexpr double kResidualDriftTolerance = 1e-9;
constexpr double kInitialBracket = 1e-2;
constexpr double kNewtonRidge = 1e-6;
constexpr Index kNewtonMinActive = 8;
constexpr int kLineSearchIterations = 60;
constexpr int kNewtonIterations = 200;
constexpr double kNewtonTolerance = 1e-14;

// Mutable state of one descent run. Residuals are kept incrementally.
class DescentState {
 public:
  DescentState(const Matrix& X, const Vector& y, QuantileLevel tau, SmoothingParam gamma, double zeta,
               const Vector* prior, const PenaltyWeights& weights, const Vector& beta, const Vector& D)
      : X_(X),
        y_(y),
        prior_(prior),
        weights_(weights),
        D_(D),
        beta_(beta),
        n_(X.rows()),
        inv_n_(1.0 / static_cast<double>(X.rows())),
        zeta_(zeta),
        tau_(tau),
        gamma_(gamma),
        inv_two_gamma_(1.0 / (2.0 * gamma.value())),
        shift_(tau.value() - 0.5) {
    refresh_residuals();
  }

  const Vector& beta() const { return beta_; }

  // Proximal update of coordinate j (0 = intercept); returns |delta|.
  double update(Index j) {
    const bool use_data = zeta_ < 1.0;
    const bool use_prior = zeta_ > 0.0;
    double g_data = 0.0;
    double g_prior = 0.0;
    if (j == 0) {
      for (Index i = 0; i < n_; ++i) {
        if (use_data) g_data += H(r_[i]);
        if (use_prior) g_prior += H(rp_[i]);
      }
    } else {
      const double* x = X_.col(j - 1).data();
      if (use_data && use_prior) {
        for (Index i = 0; i < n_; ++i) {
          g_data += x[i] * H(r_[i]);
          g_prior += x[i] * H(rp_[i]);
        }
      } else if (use_data) {
        for (Index i = 0; i < n_; ++i) g_data += x[i] * H(r_[i]);
      } else {
        for (Index i = 0; i < n_; ++i) g_prior += x[i] * H(rp_[i]);
      }
    }
    const double grad = -((1.0 - zeta_) * g_data + zeta_ * g_prior) * inv_n_;
    const double w = j == 0 ? 0.0 : weights_[j - 1];
    const double old = beta_[j];
    const double updated = soft_threshold(old - grad / D_[j], (1.0 - zeta_) * w / D_[j]);
    const double delta = updated - old;
    if (delta != 0.0) {
      beta_[j] = updated;
      if (j == 0) {
        for (Index i = 0; i < n_; ++i) r_[i] -= delta;
        if (prior_ != nullptr)
          for (Index i = 0; i < n_; ++i) rp_[i] -= delta;
      } else {
        const double* x = X_.col(j - 1).data();
        for (Index i = 0; i < n_; ++i) r_[i] -= delta * x[i];
        if (prior_ != nullptr)
          for (Index i = 0; i < n_; ++i) rp_[i] -= delta * x[i];
      }
    }
    return std::abs(delta);
  }

  // Penalty over the given nonzero candidates (ascending order).
  double objective(const std::vector<Index>& candidates) const {
    double data = 0.0;
    double prior = 0.0;
    for (Index i = 0; i < n_; ++i) {
      if (zeta_ < 1.0) data += huber_quantile_loss(r_[i], tau_, gamma_);
      if (zeta_ > 0.0) prior += huber_quantile_loss(rp_[i], tau_, gamma_);
    }
    double pen = 0.0;
    for (Index j : candidates)
      if (j > 0) pen += weights_[j - 1] * std::abs(beta_[j]);
    const double value = (1.0 - zeta_) * data * inv_n_ + zeta_ * prior * inv_n_ + (1.0 - zeta_) * pen;
    if (!std::isfinite(value)) throw Error("non-finite objective during coordinate descent");
    return value;
  }

  // Exact minimization of the objective over coordinate j alone; returns
  // |delta|. The coordinate function is convex and piecewise quadratic, so a
  // safeguarded Newton iteration on its (sub)derivative finds the minimizer.
  double minimize(Index j) {
    const double* x = j == 0 ? nullptr : X_.col(j - 1).data();
    const double old = beta_[j];
    const double w = j == 0 ? 0.0 : (1.0 - zeta_) * weights_[j - 1];
    // Smooth-part derivative and curvature at beta_j = old + t.
    auto derivative = [&](double t, double* curvature) {
      double g = 0.0;
      double c = 0.0;
      for (Index i = 0; i < n_; ++i) {
        const double xi = x == nullptr ? 1.0 : x[i];
        if (zeta_ < 1.0) {
          const double u = r_[i] - t * xi;
          g += (1.0 - zeta_) * xi * H(u);
          if (std::abs(u) < gamma_.value()) c += (1.0 - zeta_) * xi * xi;
        }
        if (zeta_ > 0.0) {
          const double u = rp_[i] - t * xi;
          g += zeta_ * xi * H(u);
          if (std::abs(u) < gamma_.value()) c += zeta_ * xi * xi;
        }
      }
      if (curvature != nullptr) *curvature = c * inv_n_ * inv_two_gamma_;
      return -g * inv_n_;
    };
    // Root of derivative(t) + sign * w on the half-line where old + t has
    // that sign (sign 0: whole line); derivative is nondecreasing in t.
    auto solve = [&](double sign, double t_lo, double t_hi, double t0) {
      double lo = t_lo;
      double hi = t_hi;
      double t = std::clamp(t0, lo, hi);
      double width = kInitialBracket;
      for (int it = 0; it < kNewtonIterations; ++it) {
        double c = 0.0;
        const double g = derivative(t, &c) + sign * w;
        if (g == 0.0) return t;
        if (g < 0.0)
          lo = t;
        else
          hi = t;
        double next = c > 0.0 ? t - g / c : std::numeric_limits<double>::quiet_NaN();
        const bool bracketed = std::isfinite(lo) && std::isfinite(hi);
        if (!(next > lo && next < hi)) {
          if (bracketed) {
            next = 0.5 * (lo + hi);
          } else {
            next = g < 0.0 ? t + width : t - width;
            width *= 2.0;
          }
        }
        if (bracketed && hi - lo <= kNewtonTolerance * (1.0 + std::abs(old + t))) return 0.5 * (lo + hi);
        if (std::abs(next - t) <= kNewtonTolerance * (1.0 + std::abs(old + t))) return next;
        t = next;
      }
      return t;
    };
    constexpr double inf = std::numeric_limits<double>::infinity();
    double t = 0.0;
    if (j == 0 || w == 0.0) {
      t = solve(0.0, -inf, inf, 0.0);
    } else {
      const double g0 = derivative(-old, nullptr);
      if (std::abs(g0) <= w)
        t = -old;
      else if (g0 < -w)
        t = solve(1.0, -old, inf, old > 0.0 ? 0.0 : -old);
      else
        t = solve(-1.0, -inf, -old, old < 0.0 ? 0.0 : -old);
    }
    double updated = old + t;
    if (j > 0 && t == -old) updated = 0.0;
    const double delta = updated - old;
    if (delta != 0.0) {
      beta_[j] = updated;
      if (j == 0) {
        r_.array() -= delta;
        if (prior_ != nullptr) rp_.array() -= delta;
      } else {
        r_.noalias() -= delta * X_.col(j - 1);
        if (prior_ != nullptr) rp_.noalias() -= delta * X_.col(j - 1);
      }
    }
    return std::abs(delta);
  }

  // One Newton step on the active coordinates with their signs held fixed:
  // the generalized Hessian of the smoothed losses (plus a small ridge)
  // gives the direction and an exact line search the length. Coordinates
  // reaching zero stop there. Returns the largest coordinate move, 0 when
  // the objective cannot be lowered along the direction.
  double newton_step(const std::vector<Index>& coords, const std::vector<Index>& candidates, double current,
                     double* value) {
    const auto m = static_cast<Index>(coords.size());
    Vector weight(n_);
    Vector score(n_);
    for (Index i = 0; i < n_; ++i) {
      double c = 0.0;
      double h = 0.0;
      if (zeta_ < 1.0) {
        h += (1.0 - zeta_) * H(r_[i]);
        if (std::abs(r_[i]) < gamma_.value()) c += 1.0 - zeta_;
      }
      if (zeta_ > 0.0) {
        h += zeta_ * H(rp_[i]);
        if (std::abs(rp_[i]) < gamma_.value()) c += zeta_;
      }
      weight[i] = c;
      score[i] = h;
    }
    Matrix XA(n_, m);
    Vector grad(m);
    for (Index k = 0; k < m; ++k) {
      const Index j = coords[static_cast<std::size_t>(k)];
      if (j == 0)
        XA.col(k).setOnes();
      else
        XA.col(k) = X_.col(j - 1);
      grad[k] = -XA.col(k).dot(score) * inv_n_;
      if (j > 0) grad[k] += (1.0 - zeta_) * weights_[j - 1] * (beta_[j] > 0.0 ? 1.0 : -1.0);
    }
    Matrix hess = XA.transpose() * weight.asDiagonal() * XA * (inv_n_ * inv_two_gamma_);
    for (Index k = 0; k < m; ++k) hess(k, k) += kNewtonRidge * D_[coords[static_cast<std::size_t>(k)]];
    const Vector direction = -hess.ldlt().solve(grad);
    if (!direction.allFinite() || !(direction.dot(grad) < 0.0)) return 0.0;
    const Vector v = XA * direction;

    double cap = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < m; ++k) {
      const Index j = coords[static_cast<std::size_t>(k)];
      if (j > 0 && direction[k] != 0.0 && (direction[k] > 0.0) != (beta_[j] > 0.0))
        cap = std::min(cap, -beta_[j] / direction[k]);
    }
    double pen_slope = 0.0;
    for (Index k = 0; k < m; ++k) {
      const Index j = coords[static_cast<std::size_t>(k)];
      if (j > 0) pen_slope += weights_[j - 1] * (beta_[j] > 0.0 ? 1.0 : -1.0) * direction[k];
    }
    auto slope = [&](double alpha) {
      double g = 0.0;
      for (Index i = 0; i < n_; ++i) {
        if (zeta_ < 1.0) g += (1.0 - zeta_) * v[i] * H(r_[i] - alpha * v[i]);
        if (zeta_ > 0.0) g += zeta_ * v[i] * H(rp_[i] - alpha * v[i]);
      }
      return -g * inv_n_ + (1.0 - zeta_) * pen_slope;
    };
    double lo = 0.0;
    double hi = std::min(cap, 1.0);
    while (slope(hi) < 0.0 && hi < cap) {
      lo = hi;
      hi = std::min(cap, 2.0 * hi);
    }
    double alpha = hi;
    if (slope(hi) >= 0.0) {
      for (int it = 0; it < kLineSearchIterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (slope(mid) < 0.0)
          lo = mid;
        else
          hi = mid;
      }
      alpha = lo > 0.0 ? lo : 0.5 * hi;
    }
    if (!(alpha > 0.0)) return 0.0;

    const Vector r_saved = r_;
    const Vector rp_saved = rp_;
    const Vector beta_saved = beta_;
    double moved_max = 0.0;
    for (Index k = 0; k < m; ++k) {
      const Index j = coords[static_cast<std::size_t>(k)];
      double next = beta_[j] + alpha * direction[k];
      if (j > 0 && (next == 0.0 || (next > 0.0) != (beta_saved[j] > 0.0))) next = 0.0;
      const double delta = next - beta_[j];
      if (delta == 0.0) continue;
      moved_max = std::max(moved_max, std::abs(delta));
      beta_[j] = next;
      if (j == 0) {
        r_.array() -= delta;
        if (prior_ != nullptr) rp_.array() -= delta;
      } else {
        r_.noalias() -= delta * X_.col(j - 1);
        if (prior_ != nullptr) rp_.noalias() -= delta * X_.col(j - 1);
      }
    }
    const double after = objective(candidates);
    if (after < current) {
      *value = after;
      return moved_max;
    }
    r_ = r_saved;
    rp_ = rp_saved;
    beta_ = beta_saved;
    return 0.0;
  }

  // Recomputes residuals from scratch; the first call initializes them.
  void refresh_residuals() {
    Vector eta = Vector::Constant(n_, beta_[0]);
    for (Index j = 0; j < X_.cols(); ++j) {
      const double b = beta_[j + 1];
      if (b == 0.0) continue;
      const double* x = X_.col(j).data();
      for (Index i = 0; i < n_; ++i) eta[i] += b * x[i];
    }
    Vector r = y_ - eta;
    Vector rp;
    if (prior_ != nullptr) rp = *prior_ - eta;
    if (r_.size() == n_) {
      const double scale = std::max(1.0, y_.size() ? y_.cwiseAbs().maxCoeff() : 0.0);
      const double drift = (r - r_).cwiseAbs().maxCoeff();
      double drift_p = 0.0;
      if (prior_ != nullptr) drift_p = (rp - rp_).cwiseAbs().maxCoeff();
      if (std::max(drift, drift_p) > kResidualDriftTolerance * scale)
        throw std::logic_error("incremental residuals drifted from recomputed residuals");
    }
    r_ = std::move(r);
    if (prior_ != nullptr) rp_ = std::move(rp);
  }

 private:
  double H(double u) const { return std::clamp(u * inv_two_gamma_, -0.5, 0.5) + shift_; }

  const Matrix& X_;
  const Vector& y_;
  const Vector* prior_;
  const PenaltyWeights& weights_;
  const Vector& D_;
  Vector beta_;
  Vector r_;
  Vector rp_;
  Index n_;
  double inv_n_;
  double zeta_;
  QuantileLevel tau_;
  SmoothingParam gamma_;
  double inv_two_gamma_;
  double shift_;
};

}  // namespace

IndexSet support_of(const Vector& beta) {
  IndexSet s;
  for (Index j = 1; j < beta.size(); ++j)
    if (beta[j] != 0.0) s.push_back(j - 1);
  return s;
}

Vector curvature_bound(const Matrix& X, SmoothingParam gamma) {
  const Index n = X.rows();
  if (n == 0) throw Error("curvature bound of an empty design");
  const double c = 2.0 / (static_cast<double>(n) * gamma.value());
  Vector D(X.cols() + 1);
  D[0] = c * static_cast<double>(n);
  for (Index j = 0; j < X.cols(); ++j) {
    double ss = 0.0;
    for (Index i = 0; i < n; ++i) ss += X(i, j) * X(i, j);
    if (!(ss > 0.0)) throw Error("curvature bound: column " + std::to_string(j + 1) + " is identically zero");
    D[j + 1] = c * ss;
  }
  return D;
}

double surrogate_objective(const Matrix& X, const Vector& y, QuantileLevel tau, SmoothingParam gamma, double zeta,
                           const Vector* prior_predictions, const PenaltyWeights& weights, const Vector& beta) {
  double value = 0.0;
  if (zeta < 1.0) value += (1.0 - zeta) * data_loss(beta, X, y, tau, gamma);
  if (zeta > 0.0) value += zeta * prior_loss(beta, X, *prior_predictions, tau, gamma);
  double pen = 0.0;
  for (Index j = 0; j < weights.size(); ++j) pen += weights[j] * std::abs(beta[j + 1]);
  return value + (1.0 - zeta) * pen;
}

FitResult coordinate_descent(const Matrix& X, const Vector& y, QuantileLevel tau, SmoothingParam gamma, double zeta,
                             const Vector* prior_predictions, const PenaltyWeights& weights, const Vector& beta_start,
                             const DescentOptions& options) {
  const Index n = X.rows();
  const Index d = X.cols();
  if (y.size() != n) throw Error("response length does not match design rows");
  if (weights.size() != d) throw Error("penalty weights must have one entry per feature");
  if (beta_start.size() != d + 1) throw Error("starting coefficients must have length d + 1");
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw Error("zeta must lie in [0, 1]");
  if ((prior_predictions != nullptr) != (zeta > 0.0))
    throw Error("prior predictions must be supplied exactly when zeta > 0");
  if (prior_predictions != nullptr && prior_predictions->size() != n)
    throw Error("prior predictions must have one entry per observation");
  const SolverControl& control = options.control;
  if (!(control.tol > 0.0)) throw Error("tolerance must be positive");

  std::vector<bool> pinned(static_cast<std::size_t>(d + 1), false);
  for (Index j : options.pinned) {
    if (j < 0 || j >= d) throw Error("pinned index out of range");
    pinned[static_cast<std::size_t>(j + 1)] = true;
  }
  // Curvature of pinned columns is never used, so zero columns may be pinned.
  Vector D(d + 1);
  D[0] = 2.0 / gamma.value();
  {
    const double c = 2.0 / (static_cast<double>(n) * gamma.value());
    for (Index j = 0; j < d; ++j) {
      if (pinned[static_cast<std::size_t>(j + 1)]) {
        D[j + 1] = 1.0;
        continue;
      }
      double ss = 0.0;
      const double* x = X.col(j).data();
      for (Index i = 0; i < n; ++i) ss += x[i] * x[i];
      if (!(ss > 0.0)) throw Error("curvature bound: column " + std::to_string(j + 1) + " is identically zero");
      D[j + 1] = c * ss;
    }
  }

  DescentState state(X, y, tau, gamma, zeta, prior_predictions, weights, beta_start, D);
  std::vector<Index> all_free;
  for (Index j = 0; j <= d; ++j)
    if (!pinned[static_cast<std::size_t>(j)]) all_free.push_back(j);

  FitResult result;
  int sweeps = 0;
  bool converged = false;
  auto nonzero = [&] {
    std::vector<Index> nz;
    for (Index j = 1; j <= d; ++j)
      if (state.beta()[j] != 0.0) nz.push_back(j);
    return nz;
  };
  auto sweep = [&](const std::vector<Index>& coords) {
    double max_delta = 0.0;
    for (Index j : coords) max_delta = std::max(max_delta, state.update(j));
    ++sweeps;
    if (sweeps % kResidualRefreshSweeps == 0) state.refresh_residuals();
    return max_delta;
  };

  while (sweeps < control.max_sweeps) {
    const double full_delta = sweep(all_free);
    std::vector<Index> nz = nonzero();
    result.objective_trace.push_back(state.objective(nz));
    if (full_delta < control.tol) {
      converged = true;
      break;
    }
    if (!control.active_set) continue;
    std::vector<Index> active{0};
    for (Index j : nz)
      if (!pinned[static_cast<std::size_t>(j)]) active.push_back(j);
    // Active phase: Newton steps on the nonzero set while it is small, and
    // an exact coordinate pass otherwise or whenever a step makes no progress. Neither raises the
    // objective, and both share their minimizers with the proximal update,
    // whose full sweep above still decides convergence.
    double value = result.objective_trace.back();
    while (sweeps < control.max_sweeps) {
      const bool small = static_cast<Index>(active.size()) <= std::max<Index>(kNewtonMinActive, n);
      double delta = small ? state.newton_step(active, nz, value, &value) : 0.0;
      if (delta == 0.0) {
        for (Index j : active) delta = std::max(delta, state.minimize(j));
        value = state.objective(nz);
      }
      ++sweeps;
      if (sweeps % kResidualRefreshSweeps == 0) state.refresh_residuals();
      result.objective_trace.push_back(value);
      if (delta < control.tol) break;
      std::erase_if(active, [&](Index j) { return j > 0 && state.beta()[j] == 0.0; });
    }
  }

  result.beta = state.beta();
  result.beta_standardized = result.beta;
  result.support = support_of(result.beta);
  result.sweeps_used = sweeps;
  result.converged = converged;
  return result;
}

// --- Problem -------------------------------------------------------------------

Problem::Problem(const Dataset& ds) : original_(ds) {
  ds.validate();
  auto [std_ds, st] = standardize(ds);
  standardized_ = std::move(std_ds);
  standardization_ = std::move(st);
  constant_ = standardization_.constant_columns();
}

FitResult Problem::finish(FitResult raw, double shift) const {
  raw.beta_standardized = raw.beta;
  raw.beta_standardized[0] += shift;
  raw.beta = standardization_.to_original(raw.beta_standardized);
  raw.support = support_of(raw.beta);
  return raw;
}

FitResult Problem::descend(QuantileLevel tau, SmoothingParam gamma, double zeta, const Vector* prior_predictions,
                           const PenaltyWeights& weights, const Vector* beta_start, const SolverControl& control,
                           const IndexSet& extra_pinned) const {
  // Shifting the response by its tau-quantile only moves the unpenalized
  // intercept, so the minimizer is unchanged.
  const std::span<const double> yv(original_.y.data(), static_cast<std::size_t>(original_.y.size()));
  const double shift = stats::sample_quantile(yv, tau.value());
  const Vector y = standardized_.y.array() - shift;
  Vector prior_shifted;
  if (prior_predictions != nullptr) prior_shifted = prior_predictions->array() - shift;
  Vector start = Vector::Zero(d() + 1);
  if (beta_start != nullptr) {
    if (beta_start->size() != d() + 1) throw Error("warm start has the wrong length");
    start = *beta_start;
    start[0] -= shift;
  }
  DescentOptions options;
  options.control = control;
  options.pinned = constant_;
  if (!extra_pinned.empty()) {
    options.pinned.insert(options.pinned.end(), extra_pinned.begin(), extra_pinned.end());
    options.pinned = make_index_set(std::move(options.pinned));
  }
  for (Index j : constant_) start[j + 1] = 0.0;
  FitResult raw = coordinate_descent(standardized_.X, y, tau, gamma, zeta,
                                     prior_predictions != nullptr ? &prior_shifted : nullptr, weights, start, options);
  return finish(std::move(raw), shift);
}

FitResult Problem::lasso(QuantileLevel tau, SmoothingParam gamma, double lambda, const SolverControl& control,
                         const Vector* beta_start) const {
  return descend(tau, gamma, 0.0, nullptr, l1_weights(d(), lambda), beta_start, control);
}

FitResult Problem::lla_refits(const FitResult& initial, QuantileLevel tau, SmoothingParam gamma, double zeta,
                              const Vector* prior_predictions, const ScadParams& scad, int passes,
                              const SolverControl& control, const IndexSet& unpenalized) const {
  FitResult current = initial;
  for (int pass = 2; pass <= passes; ++pass) {
    const Vector slopes = current.beta_standardized.tail(d());
    const PenaltyWeights w = mask_weights(lla_weights(slopes, scad), unpenalized);
    current = descend(tau, gamma, zeta, prior_predictions, w, &current.beta_standardized, control);
  }
  return current;
}

FitResult Problem::prior_informed(QuantileLevel tau, SmoothingParam gamma, const ScadParams& scad,
                                  const IndexSet& prior_set, int passes, const SolverControl& control,
                                  const Vector* beta_start) const {
  for (Index j : prior_set)
    if (j < 0 || j >= d()) throw Error("prior set index " + std::to_string(j) + " out of range");
  if (static_cast<Index>(prior_set.size()) >= n())
    throw Error("unpenalized fit underdetermined: prior set has at least n features");
  const PenaltyWeights w0 = mask_weights(l1_weights(d(), scad.lambda), prior_set);
  FitResult first = descend(tau, gamma, 0.0, nullptr, w0, beta_start, control);
  return lla_refits(first, tau, gamma, 0.0, nullptr, scad, passes, control, prior_set);
}

Vector Problem::prior_predictions(const FitConfig& config, const PriorKnowledge& prior) const {
  if (const auto* set = std::get_if<PriorSet>(&prior)) {
    const FitResult fit = prior_informed(config.tau, config.gamma, config.scad, make_index_set(set->features),
                                         config.lla_passes, config.control());
    return predict(fit.beta);
  }
  if (const auto* coefs = std::get_if<PriorCoefficients>(&prior)) {
    if (coefs->beta.size() != d() + 1) throw Error("prior coefficients must have length d + 1");
    return predict(coefs->beta);
  }
  const auto& preds = std::get<PriorPredictions>(prior).values;
  if (preds.size() != n()) throw Error("prior predictions must have one entry per observation");
  if (!preds.allFinite()) throw Error("prior predictions contain non-finite values");
  return preds;
}

FitResult Problem::kiqr(const FitConfig& config, const Vector& prior_predictions) const {
  config.validate();
  if (config.zeta == 1.0 && d() >= n() && config.scad.lambda > 0.0)
    warn("zeta = 1 removes the penalty; the fit is underdetermined with d >= n");
  const SolverControl control = config.control();
  const FitResult initial = lasso(config.tau, config.gamma, config.scad.lambda, control);
  const Vector* prior = config.zeta > 0.0 ? &prior_predictions : nullptr;
  return lla_refits(initial, config.tau, config.gamma, config.zeta, prior, config.scad, config.lla_passes, control);
}

FitResult Problem::oracle(const FitConfig& config, const Vector* prior_predictions, const IndexSet& support) const {
  config.validate();
  const IndexSet s = make_index_set(support);
  for (Index j : s)
    if (j < 0 || j >= d()) throw Error("oracle support index out of range");
  if (static_cast<Index>(s.size()) >= n()) throw Error("restricted oracle fit underdetermined: |support| >= n");
  if (config.zeta > 0.0 && prior_predictions == nullptr) throw Error("oracle fit with zeta > 0 needs a prior");
  IndexSet pinned;
  for (Index j = 0; j < d(); ++j)
    if (!contains(s, j)) pinned.push_back(j);
  const PenaltyWeights w(Vector::Zero(d()));
  return descend(config.tau, config.gamma, config.zeta, config.zeta > 0.0 ? prior_predictions : nullptr, w, nullptr,
                 config.control(), pinned);
}

double Problem::lambda_max(QuantileLevel tau, SmoothingParam gamma, double zeta, const Vector* prior_predictions,
                           const SolverControl& control) const {
  if (!(zeta >= 0.0 && zeta < 1.0)) throw Error("lambda_max needs zeta in [0, 1)");
  IndexSet all(static_cast<std::size_t>(d()));
  for (Index j = 0; j < d(); ++j) all[static_cast<std::size_t>(j)] = j;
  const PenaltyWeights w(Vector::Zero(d()));
  const Vector* prior = zeta > 0.0 ? prior_predictions : nullptr;
  if (zeta > 0.0 && prior == nullptr) throw Error("lambda_max with zeta > 0 needs prior predictions");
  const FitResult base = descend(tau, gamma, zeta, prior, w, nullptr, control, all);
  const Vector& b = base.beta_standardized;
  double best = 0.0;
  if (d() == 0) return 0.0;
  const Matrix& X = standardized_.X;
  LossAndGradient g = data_loss_with_gradient(b, X, standardized_.y, tau, gamma);
  Vector grad = (1.0 - zeta) * g.gradient;
  if (prior != nullptr) grad += zeta * prior_loss_with_gradient(b, X, *prior, tau, gamma).gradient;
  for (Index j = 1; j <= d(); ++j)
    if (!contains(constant_, j - 1)) best = std::max(best, std::abs(grad[j]));
  return best / (1.0 - zeta);
}

Vector Problem::predict(const Vector& beta) const { return linear_predictor(beta, original_.X); }

// --- FitConfig and free functions ---------------------------------------------------

FitConfig::FitConfig(double tau_, double lambda, double zeta_) : tau(tau_), zeta(zeta_), scad(lambda) {}

void FitConfig::validate() const {
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw Error("zeta must lie in [0, 1]");
  if (!(tol > 0.0)) throw Error("tolerance must be positive");
  if (max_sweeps < 1) throw Error("max_sweeps must be positive");
  if (lla_passes < 1) throw Error("lla_passes must be at least 1");
}

FitResult fit_lasso_qr(const Dataset& ds, double tau, double gamma, double lambda, const SolverControl& control) {
  if (!(lambda >= 0.0)) throw Error("lambda must be nonnegative");
  return Problem(ds).lasso(QuantileLevel(tau), SmoothingParam(gamma), lambda, control);
}

FitResult fit_prior_informed(const Dataset& ds, double tau, double gamma, double lambda, const IndexSet& prior_set,
                             int lla_passes, const SolverControl& control) {
  if (lla_passes < 1) throw Error("lla_passes must be at least 1");
  return Problem(ds).prior_informed(QuantileLevel(tau), SmoothingParam(gamma), ScadParams(lambda),
                                    make_index_set(prior_set), lla_passes, control);
}

FitResult fit_kiqr(const Dataset& ds, const FitConfig& config, const PriorKnowledge& prior) {
  config.validate();
  const Problem problem(ds);
  const Vector preds = problem.prior_predictions(config, prior);
  return problem.kiqr(config, preds);
}

FitResult fit_oracle(const Dataset& ds, const FitConfig& config, const std::optional<PriorKnowledge>& prior,
                     const IndexSet& support) {
  const Problem problem(ds);
  if (config.zeta > 0.0) {
    if (!prior) throw Error("oracle fit with zeta > 0 needs a prior");
    const Vector preds = problem.prior_predictions(config, *prior);
    return problem.oracle(config, &preds, support);
  }
  return problem.oracle(config, nullptr, support);
}

}  // namespace kiqr
