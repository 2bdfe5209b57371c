#pragma once

// Soft-impute low-rank completion. Each iteration fills the missing entries
// from the current estimate, takes an SVD and soft-thresholds the spectrum:
//
//     W     = Z_k (.) (1 - B) + X (.) B
//     Z_k+1 = U max(S - lambda, 0) V^T,   W = U S V^T
//
// This is majorize-minimize for  1/2 ||P_obs(X - Z)||_F^2 + lambda ||Z||_*,
// so that objective (reported as twice its value, i.e. the squared residual
// plus 2 lambda times the nuclear norm) never increases along the iterates.

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

#include "sparsemiss/datagen.hpp"
#include "sparsemiss/errors.hpp"
#include "sparsemiss/linalg.hpp"

namespace sparsemiss {

struct CompletionConfig {
  double shrinkage = 0.1;
  std::size_t max_iters = 200;
  double rel_tol = 1e-5;
  /// Overwrite observed positions of the result with the observed data.
  bool keep_observed = false;
};

struct CompletionResult {
  DenseMatrix completed;
  std::size_t iterations_used = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

/// max(s_i - lam, 0) elementwise.
inline Vector shrink_singular(const Vector& s, double lam) {
  if (!(lam >= 0.0)) throw InvalidInput("shrink_singular: negative shrinkage");
  return (s.array() - lam).cwiseMax(0.0).matrix();
}

/// Soft-thresholded reconstruction U max(S - lam, 0) V^T of `w`, together
/// with its nuclear norm. The spectrum comes from the eigendecomposition of
/// the smaller Gram matrix; only directions with s > lam are kept, and for
/// those w^T w = V S^2 V^T gives U S' V^T = w V diag(S'/S) V^T exactly.
struct SpectralShrink {
  DenseMatrix reconstruction;
  double nuclear_norm = 0.0;
  Vector singular_values;  // nonincreasing, before shrinking
};

inline SpectralShrink spectral_shrink(const DenseMatrix& w, double lam) {
  const bool tall = w.rows() >= w.cols();
  const Eigen::Index k = std::min(w.rows(), w.cols());
  DenseMatrix gram(k, k);
  gram.setZero();
  if (tall)
    gram.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose());
  else
    gram.selfadjointView<Eigen::Lower>().rankUpdate(w);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(gram);
  if (eig.info() != Eigen::Success)
    throw NumericalFailure("soft_impute: eigen solver did not converge",
                           std::numeric_limits<double>::infinity());

  SpectralShrink out;
  out.singular_values = eig.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
  Eigen::Index keep = 0;
  while (keep < k && out.singular_values(keep) > lam && out.singular_values(keep) > 0.0) ++keep;

  const DenseMatrix basis = eig.eigenvectors().rowwise().reverse().leftCols(keep);
  Vector coef(keep);
  for (Eigen::Index i = 0; i < keep; ++i) {
    const double s = out.singular_values(i);
    coef(i) = (s - lam) / s;
    out.nuclear_norm += s - lam;
  }
  const DenseMatrix projector = basis * coef.asDiagonal() * basis.transpose();
  out.reconstruction = tall ? DenseMatrix(w * projector) : DenseMatrix(projector * w);
  return out;
}

/// ||P_obs(X - Z)||_F^2 + 2 lam ||Z||_*  given the nuclear norm of Z.
inline double completion_objective(const MaskedMatrix& masked, const DenseMatrix& z,
                                   double nuclear_norm, double lam) {
  const double residual =
      (masked.mask.array() * (masked.observed - z).array()).matrix().squaredNorm();
  return residual + 2.0 * lam * nuclear_norm;
}

/// Runs soft-impute from `warm_start` (defaults to the observed matrix,
/// i.e. zeros at missing positions).
inline CompletionResult soft_impute(const MaskedMatrix& masked, const CompletionConfig& cfg,
                                    const std::optional<DenseMatrix>& warm_start = std::nullopt) {
  if (masked.observed.rows() != masked.mask.rows() ||
      masked.observed.cols() != masked.mask.cols())
    throw InvalidInput("soft_impute: mask shape does not match data");
  if (!(cfg.shrinkage >= 0.0)) throw InvalidInput("soft_impute: negative shrinkage");
  if (!(cfg.rel_tol > 0.0)) throw InvalidInput("soft_impute: rel_tol must be positive");
  if (cfg.max_iters < 1) throw InvalidInput("soft_impute: max_iters must be >= 1");
  if (!masked.observed.allFinite()) throw InvalidInput("soft_impute: non-finite data");
  const double observed_count = masked.mask.sum();
  if (observed_count < 1.0) throw InvalidInput("soft_impute: no observed entries");

  CompletionResult res;
  const bool fully_observed = observed_count == static_cast<double>(masked.mask.size());
  if (fully_observed && cfg.shrinkage == 0.0) {
    // The data itself is the unique minimizer.
    res.completed = masked.observed;
    res.iterations_used = 1;
    res.converged = true;
    res.objective_trace.push_back(0.0);
    return res;
  }

  const DenseMatrix missing = (1.0 - masked.mask.array()).matrix();
  DenseMatrix z = warm_start ? *warm_start : masked.observed;
  if (z.rows() != masked.observed.rows() || z.cols() != masked.observed.cols())
    throw InvalidInput("soft_impute: warm start has the wrong shape");

  for (std::size_t k = 0; k < cfg.max_iters; ++k) {
    const DenseMatrix filled = (z.array() * missing.array()).matrix() + masked.observed;
    SpectralShrink step = spectral_shrink(filled, cfg.shrinkage);
    DenseMatrix next = std::move(step.reconstruction);
    if (!next.allFinite())
      throw NumericalFailure("soft_impute: non-finite iterate", std::numeric_limits<double>::infinity());

    res.objective_trace.push_back(
        completion_objective(masked, next, step.nuclear_norm, cfg.shrinkage));
    res.iterations_used = k + 1;
    const double change = (next - z).norm();
    const double scale = std::max(1.0, z.norm());
    z = std::move(next);
    if (change <= cfg.rel_tol * scale) {
      res.converged = true;
      break;
    }
  }

  if (cfg.keep_observed) {
    z = (z.array() * missing.array()).matrix() + masked.observed;
  }
  res.completed = std::move(z);
  return res;
}

}  // namespace sparsemiss
