#pragma once

// Sparse recovery for Y ~ X beta:
//   * IMAT  - Landweber step followed by hard thresholding, the threshold
//             either c * mean|beta_k| (adaptive) or T0 exp(-decay k).
//   * IHT   - Landweber step followed by keeping the s largest magnitudes.
//   * LASSO - cyclic coordinate descent on ||X beta - Y||^2 + lambda ||beta||_1.
//
// All three work on the Gram form G = X^T X, b = X^T Y when X is tall, which
// is algebraically the same iteration at n^2 instead of 2mn per step. Callers
// fitting many parameters on one design can pass the products in.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <variant>
#include <vector>

#include "sparsemiss/errors.hpp"
#include "sparsemiss/linalg.hpp"

namespace sparsemiss {

struct RecoveryResult {
  Vector beta_hat;
  std::size_t iterations_used = 0;
  bool converged = false;
  double final_threshold = 0.0;  // IMAT only
  /// LASSO objective after every sweep; empty for the thresholding solvers.
  std::vector<double> objective_trace;
};

// ---------------------------------------------------------------------------
// Thresholding primitives

/// Zero every entry with |v(i)| < t; entries at exactly t survive.
inline Vector hard_threshold(const Vector& v, double t) {
  if (!(t >= 0.0)) throw InvalidInput("hard_threshold: negative threshold");
  return (v.array().abs() < t).select(0.0, v);
}

/// c times the mean magnitude of beta_k over all of its entries.
inline double adaptive_threshold(const Vector& beta_k, double c) {
  if (!(c > 0.0)) throw InvalidInput("adaptive_threshold: c must be positive");
  if (beta_k.size() == 0) return 0.0;
  return c * beta_k.cwiseAbs().mean();
}

/// Keep the s entries of largest magnitude; ties go to the lower index.
inline Vector keep_largest(const Vector& v, Eigen::Index s) {
  const Eigen::Index n = v.size();
  if (s >= n) return v;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  auto before = [&v](Eigen::Index a, Eigen::Index b) {
    const double fa = std::abs(v(a)), fb = std::abs(v(b));
    return fa > fb || (fa == fb && a < b);
  };
  std::nth_element(idx.begin(), idx.begin() + s, idx.end(), before);
  Vector out = Vector::Zero(n);
  for (Eigen::Index k = 0; k < s; ++k) {
    const auto i = idx[static_cast<std::size_t>(k)];
    out(i) = v(i);
  }
  return out;
}

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// ---------------------------------------------------------------------------
// Configurations

struct AdaptiveThreshold {
  double c = 2.0;
};

struct ExponentialThreshold {
  double t0 = 1.0;
  double decay = 0.1;
};

struct ImatConfig {
  /// Relaxation factor; defaults to 1 / sigma_max(X)^2.
  std::optional<double> step;
  std::variant<AdaptiveThreshold, ExponentialThreshold> threshold = AdaptiveThreshold{};
  std::size_t max_iters = 200;
  double rel_tol = 1e-6;
  /// Caller-supplied sigma_max(X), skips recomputing it for the step bound.
  std::optional<double> x_spectral_norm;
};

struct IhtConfig {
  Eigen::Index sparsity = 8;
  std::optional<double> step;
  std::size_t max_iters = 200;
  double rel_tol = 1e-6;
  std::optional<double> x_spectral_norm;
};

struct LassoConfig {
  double penalty = 0.1;
  std::size_t max_sweeps = 10000;
  double kkt_tol = 1e-6;
};

/// X^T X and X^T Y. Fits that share a design can share these.
struct GramProducts {
  DenseMatrix gram;
  Vector xty;
};

inline GramProducts gram_products(const DenseMatrix& x, const Vector& y) {
  GramProducts p;
  p.gram = DenseMatrix::Zero(x.cols(), x.cols());
  p.gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  p.gram.triangularView<Eigen::StrictlyUpper>() = p.gram.transpose();
  p.xty = x.transpose() * y;
  return p;
}

// ---------------------------------------------------------------------------

namespace detail {

inline void check_problem(const DenseMatrix& x, const Vector& y, const GramProducts* pre,
                          const char* who) {
  if (x.rows() != y.size())
    throw InvalidInput(std::string(who) + ": rows of X do not match length of Y");
  if (x.rows() < 1 || x.cols() < 1) throw InvalidInput(std::string(who) + ": empty design");
  if (!x.allFinite() || !y.allFinite())
    throw InvalidInput(std::string(who) + ": non-finite data");
  if (pre && (pre->gram.rows() != x.cols() || pre->gram.cols() != x.cols() || pre->xty.size() != x.cols()))
    throw InvalidInput(std::string(who) + ": precomputed products do not match X");
}

/// Resolve the Landweber step and reject anything outside (0, 2 / sigma_max^2).
inline double landweber_step(const DenseMatrix& x, std::optional<double> step,
                             std::optional<double> x_norm, const char* who) {
  const double sigma = x_norm ? *x_norm : spectral_norm(x);
  if (!(sigma > 0.0)) throw InvalidInput(std::string(who) + ": X is identically zero");
  const double bound = 2.0 / (sigma * sigma);
  const double mu = step ? *step : 1.0 / (sigma * sigma);
  if (!(mu > 0.0) || !(mu < bound))
    throw InvalidInput(std::string(who) + ": step outside (0, 2/sigma_max^2)");
  return mu;
}

/// Evaluates X^T (Y - X beta) for sparse-ish beta, through the Gram matrix
/// when X is tall (or when the products are supplied) and directly otherwise.
class GradientOracle {
 public:
  GradientOracle(const DenseMatrix& x, const Vector& y, const GramProducts* pre) : x_(x), y_(y) {
    if (pre) {
      products_ = pre;
    } else if (x.rows() > x.cols()) {
      own_ = gram_products(x, y);
      products_ = &own_;
    }
  }

  Vector operator()(const Vector& beta) const {
    // Column updates pay off only while beta is sparse.
    const bool dense = 4 * (beta.array() != 0.0).count() > beta.size();
    if (products_) {
      Vector g = products_->xty;
      if (dense) {
        g.noalias() -= products_->gram * beta;
        return g;
      }
      for (Eigen::Index j = 0; j < beta.size(); ++j)
        if (beta(j) != 0.0) g.noalias() -= products_->gram.col(j) * beta(j);
      return g;
    }
    Vector r = y_;
    if (dense) {
      r.noalias() -= x_ * beta;
    } else {
      for (Eigen::Index j = 0; j < beta.size(); ++j)
        if (beta(j) != 0.0) r.noalias() -= x_.col(j) * beta(j);
    }
    return x_.transpose() * r;
  }

 private:
  const DenseMatrix& x_;
  const Vector& y_;
  GramProducts own_;
  const GramProducts* products_ = nullptr;
};

// A plain norm squares into inf on runaway iterates, and inf <= inf; redo
// those with stableNorm.
inline bool step_converged(const Vector& next, const Vector& prev, double rel_tol) {
  const Vector diff = next - prev;
  double d = diff.norm(), p = prev.norm();
  if (!std::isfinite(d) || !std::isfinite(p)) {
    d = diff.stableNorm();
    p = prev.stableNorm();
  }
  return d <= rel_tol * std::max(1.0, p);
}

}  // namespace detail

/// IMAT: beta_{k+1} = T_{k+1}(beta_k + step X^T (Y - X beta_k)), beta_0 = 0.
/// In adaptive mode the threshold for step k+1 is c * mean|beta_k|; in
/// exponential mode it is t0 * exp(-decay * (k+1)).
inline RecoveryResult imat_recover(const DenseMatrix& x, const Vector& y,
                                   const ImatConfig& cfg, const GramProducts* pre = nullptr) {
  detail::check_problem(x, y, pre, "imat_recover");
  if (!(cfg.rel_tol > 0.0)) throw InvalidInput("imat_recover: rel_tol must be positive");
  if (const auto* a = std::get_if<AdaptiveThreshold>(&cfg.threshold); a && !(a->c > 0.0))
    throw InvalidInput("imat_recover: c must be positive");
  if (const auto* e = std::get_if<ExponentialThreshold>(&cfg.threshold);
      e && !(e->t0 > 0.0 && e->decay > 0.0))
    throw InvalidInput("imat_recover: t0 and decay must be positive");

  const double step = detail::landweber_step(x, cfg.step, cfg.x_spectral_norm, "imat_recover");
  const detail::GradientOracle gradient(x, y, pre);

  RecoveryResult res;
  Vector beta = Vector::Zero(x.cols());
  for (std::size_t k = 0; k < cfg.max_iters; ++k) {
    const double t = std::visit(
        [&](const auto& mode) {
          using Mode = std::decay_t<decltype(mode)>;
          if constexpr (std::is_same_v<Mode, AdaptiveThreshold>) {
            return adaptive_threshold(beta, mode.c);
          } else {
            return mode.t0 * std::exp(-mode.decay * static_cast<double>(k + 1));
          }
        },
        cfg.threshold);
    Vector next = hard_threshold(beta + step * gradient(beta), t);
    if (!next.allFinite()) throw Divergence("imat_recover", k + 1);

    res.iterations_used = k + 1;
    res.final_threshold = t;
    const bool done = detail::step_converged(next, beta, cfg.rel_tol);
    beta = std::move(next);
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.beta_hat = std::move(beta);
  return res;
}

/// IHT: beta_{k+1} = H_s(beta_k + mu X^T (Y - X beta_k)), beta_0 = 0.
inline RecoveryResult iht_recover(const DenseMatrix& x, const Vector& y, const IhtConfig& cfg,
                                  const GramProducts* pre = nullptr) {
  detail::check_problem(x, y, pre, "iht_recover");
  if (cfg.sparsity < 1 || cfg.sparsity > x.cols())
    throw InvalidInput("iht_recover: sparsity must lie in [1, n]");
  if (!(cfg.rel_tol > 0.0)) throw InvalidInput("iht_recover: rel_tol must be positive");

  const double step = detail::landweber_step(x, cfg.step, cfg.x_spectral_norm, "iht_recover");
  const detail::GradientOracle gradient(x, y, pre);

  RecoveryResult res;
  Vector beta = Vector::Zero(x.cols());
  for (std::size_t k = 0; k < cfg.max_iters; ++k) {
    Vector next = keep_largest(beta + step * gradient(beta), cfg.sparsity);
    if (!next.allFinite()) throw Divergence("iht_recover", k + 1);

    res.iterations_used = k + 1;
    const bool done = detail::step_converged(next, beta, cfg.rel_tol);
    beta = std::move(next);
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.beta_hat = std::move(beta);
  return res;
}

/// ||X beta - Y||^2 + lambda ||beta||_1
inline double lasso_objective(const DenseMatrix& x, const Vector& y, const Vector& beta,
                              double penalty) {
  return (x * beta - y).squaredNorm() + penalty * beta.lpNorm<1>();
}

/// Worst violation of the optimality conditions of the LASSO objective:
/// |2 X_j^T(X beta - Y) + lambda sign(beta_j)| on the support and
/// max(0, |2 X_j^T(X beta - Y)| - lambda) off it.
inline double lasso_kkt_residual(const Vector& gradient_half, const Vector& beta,
                                 double penalty) {
  // gradient_half = X^T (Y - X beta), so 2 X^T (X beta - Y) = -2 * gradient_half.
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double g = -2.0 * gradient_half(j);
    const double v = beta(j) != 0.0 ? std::abs(g + penalty * (beta(j) > 0 ? 1.0 : -1.0))
                                     : std::max(0.0, std::abs(g) - penalty);
    worst = std::max(worst, v);
  }
  return worst;
}

/// Cyclic coordinate descent in covariance form. Each coordinate update is
///   beta_j <- soft(X_j^T r + G_jj beta_j, lambda / 2) / G_jj
/// with r the current residual; columns with G_jj == 0 stay at zero.
inline RecoveryResult lasso_solve(const DenseMatrix& x, const Vector& y, const LassoConfig& cfg,
                                  const GramProducts* pre = nullptr) {
  detail::check_problem(x, y, pre, "lasso_solve");
  if (!(cfg.penalty >= 0.0)) throw InvalidInput("lasso_solve: penalty must be >= 0");
  if (!(cfg.kkt_tol > 0.0)) throw InvalidInput("lasso_solve: kkt_tol must be positive");

  const Eigen::Index n = x.cols();
  GramProducts own;
  if (!pre) own = gram_products(x, y);
  const DenseMatrix& gram = pre ? pre->gram : own.gram;
  const Vector& xty = pre ? pre->xty : own.xty;
  const double yty = y.squaredNorm();
  const double half = cfg.penalty / 2.0;

  Vector beta = Vector::Zero(n);
  Vector q = xty;  // X^T (Y - X beta)

  auto objective = [&] {
    // ||Y - X beta||^2 = Y^T Y - beta^T (X^T Y + q)
    return std::max(0.0, yty - beta.dot(xty + q)) + cfg.penalty * beta.lpNorm<1>();
  };

  RecoveryResult res;
  for (std::size_t sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double gjj = gram(j, j);
      if (gjj <= 0.0) {
        beta(j) = 0.0;
        continue;
      }
      const double old = beta(j);
      const double updated = soft_threshold(q(j) + gjj * old, half) / gjj;
      const double delta = updated - old;
      if (delta != 0.0) {
        beta(j) = updated;
        q.noalias() -= gram.col(j) * delta;
      }
    }
    if (!beta.allFinite()) throw Divergence("lasso_solve", sweep + 1);
    res.iterations_used = sweep + 1;
    res.objective_trace.push_back(objective());

    if (lasso_kkt_residual(q, beta, cfg.penalty) <= cfg.kkt_tol) {
      // Confirm against a freshly recomputed gradient before declaring victory.
      q = xty - gram * beta;
      if (lasso_kkt_residual(q, beta, cfg.penalty) <= cfg.kkt_tol) {
        res.converged = true;
        break;
      }
    }
  }
  res.beta_hat = std::move(beta);
  return res;
}

}  // namespace sparsemiss
