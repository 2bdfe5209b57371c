#pragma once

// Dense real kernels shared by the generators, solvers and completion.
// Matrices are Eigen column-major doubles; storage order never leaks into
// results (exported files are written row-major, see io.hpp).

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sparsemiss/errors.hpp"

namespace sparsemiss {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct LinalgTolerances {
  /// Relative Frobenius reconstruction error an SVD must meet.
  double svd_reconstruction = 1e-8;
  /// R diagonal below this fraction of ||a||_F flags rank deficiency.
  double rank_deficiency = 1e-12;
};

struct SvdFactors {
  DenseMatrix u;         // m x k
  Vector singular_values;  // k, nonincreasing, >= 0
  DenseMatrix v;         // n x k
};

inline bool all_finite(const DenseMatrix& a) { return a.allFinite(); }

inline void require_finite(const DenseMatrix& a, const char* what) {
  if (!a.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entry");
}

/// Thin SVD, k = min(rows, cols). Singular values come back sorted
/// nonincreasing and nonnegative; any sign is carried by U.
inline SvdFactors svd(const DenseMatrix& a, const LinalgTolerances& tol = {}) {
  if (a.rows() < 1 || a.cols() < 1) throw InvalidInput("svd: empty matrix");
  require_finite(a, "svd");

  Eigen::BDCSVD<DenseMatrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdFactors f{dec.matrixU(), dec.singularValues(), dec.matrixV()};

  const double scale = std::max(1.0, a.norm());
  if (dec.info() != Eigen::Success || !f.u.allFinite() || !f.v.allFinite() ||
      !f.singular_values.allFinite()) {
    throw NumericalFailure("svd: decomposition did not converge",
                           std::numeric_limits<double>::infinity());
  }
  for (Eigen::Index i = 0; i < f.singular_values.size(); ++i) {
    if (f.singular_values(i) < 0.0) {
      f.singular_values(i) = -f.singular_values(i);
      f.u.col(i) = -f.u.col(i);
    }
  }
  const double residual =
      (f.u * f.singular_values.asDiagonal() * f.v.transpose() - a).norm() / scale;
  if (residual > tol.svd_reconstruction) {
    throw NumericalFailure("svd: reconstruction tolerance not met", residual);
  }
  return f;
}

/// Orthonormal basis for the column span of `a` (Householder QR, thin Q).
/// Columns are signed so that R has a positive diagonal.
inline DenseMatrix orthonormalize(const DenseMatrix& a, const LinalgTolerances& tol = {}) {
  if (a.rows() < a.cols()) throw InvalidInput("orthonormalize: rows < cols");
  if (a.cols() < 1) throw InvalidInput("orthonormalize: no columns");
  require_finite(a, "orthonormalize");

  Eigen::HouseholderQR<DenseMatrix> qr(a);
  const DenseMatrix r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  const double floor = tol.rank_deficiency * a.norm();
  DenseMatrix q = qr.householderQ() * DenseMatrix::Identity(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double d = r(j, j);
    if (!(std::abs(d) > floor)) {
      throw RankDeficiency("orthonormalize: rank-deficient input",
                           static_cast<std::size_t>(j));
    }
    if (d < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

/// Largest singular value, from the top eigenvalue of the smaller Gram matrix.
inline double spectral_norm(const DenseMatrix& a) {
  if (a.rows() < 1 || a.cols() < 1) throw InvalidInput("spectral_norm: empty matrix");
  require_finite(a, "spectral_norm");

  DenseMatrix gram = a.rows() >= a.cols() ? DenseMatrix(a.transpose() * a)
                                          : DenseMatrix(a * a.transpose());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw NumericalFailure("spectral_norm: eigen solver did not converge",
                           std::numeric_limits<double>::infinity());
  }
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

/// Number of singular values above `tol` times the largest.
inline Eigen::Index numerical_rank(const DenseMatrix& a, double tol) {
  const Vector s = svd(a).singular_values;
  if (s.size() == 0 || s(0) == 0.0) return 0;
  return (s.array() > tol * s(0)).count();
}

}  // namespace sparsemiss
