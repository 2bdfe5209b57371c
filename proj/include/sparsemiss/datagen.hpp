#pragma once

// Synthetic data for the missing-entry regression model
//
//     Y = X_oracle * beta + eps,   X_observed = X_oracle (.) B,  B_ij ~ Ber(alpha)
//
// where X_oracle = U diag(sigma) V^T is low rank with random orthonormal
// factors, beta is s-sparse Gaussian and alpha is the probability that an
// entry is KEPT. Sub-seeds for one dataset are seed, seed+1, ..., seed+5 for
// U, V, sigma, beta, eps and the mask, in that order.

#include <cstdint>
#include <numeric>
#include <vector>

#include "sparsemiss/errors.hpp"
#include "sparsemiss/linalg.hpp"
#include "sparsemiss/rng.hpp"

namespace sparsemiss {

struct SparseSignal {
  Vector values;
  Eigen::Index sparsity = 0;
};

/// Indices i with v(i) != 0, ascending.
inline std::vector<Eigen::Index> support(const Vector& v) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v(i) != 0.0) idx.push_back(i);
  return idx;
}

struct MaskedMatrix {
  DenseMatrix observed;  // zeros where mask == 0
  DenseMatrix mask;      // entries in {0, 1}
  double keep_probability = 1.0;
};

struct DatasetParams {
  Eigen::Index m = 100;
  Eigen::Index n = 100;
  Eigen::Index rank = 50;
  Eigen::Index sparsity = 8;
  double alpha = 0.5;
  double noise_sigma = 0.1;
};

struct Dataset {
  DatasetParams params;
  MaskedMatrix masked;
  DenseMatrix oracle;
  SparseSignal beta_true;
  Vector labels;
  std::uint64_t seed = 0;
};

namespace detail {

inline DenseMatrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = rng.gaussian();
  return g;
}

}  // namespace detail

/// Random rank-r matrix U diag(|z|) V^T with orthonormal U (m x r), V (n x r).
/// Consumes seeds seed, seed+1, seed+2.
inline DenseMatrix gen_low_rank(Eigen::Index m, Eigen::Index n, Eigen::Index r,
                                std::uint64_t seed) {
  if (m < 1 || n < 1) throw InvalidInput("gen_low_rank: dimensions must be positive");
  if (r < 1 || r > std::min(m, n)) throw InvalidInput("gen_low_rank: rank out of range");

  const DenseMatrix u = orthonormalize(detail::gaussian_matrix(m, r, seed));
  const DenseMatrix v = orthonormalize(detail::gaussian_matrix(n, r, seed + 1));
  Rng rng(seed + 2);
  Vector sigma(r);
  for (Eigen::Index i = 0; i < r; ++i) sigma(i) = std::abs(rng.gaussian());
  return u * sigma.asDiagonal() * v.transpose();
}

/// s-sparse vector: support uniform without replacement (partial Fisher-Yates),
/// then the s values i.i.d. N(0, 1) in the order the indices were drawn.
inline SparseSignal gen_sparse_beta(Eigen::Index n, Eigen::Index s, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("gen_sparse_beta: n must be positive");
  if (s < 1 || s > n) throw InvalidInput("gen_sparse_beta: sparsity out of range");

  Rng rng(seed);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < s; ++i) {
    const auto remaining = static_cast<std::uint64_t>(n - i);
    const auto j = i + static_cast<Eigen::Index>(rng.below(remaining));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  SparseSignal beta{Vector::Zero(n), s};
  for (Eigen::Index i = 0; i < s; ++i) {
    double value = rng.gaussian();
    // An exact zero draw would shrink the support; redraw (probability ~0).
    while (value == 0.0) value = rng.gaussian();
    beta.values(perm[static_cast<std::size_t>(i)]) = value;
  }
  return beta;
}

/// Bernoulli(alpha) keep-mask applied entrywise; drawn in row-major order.
inline MaskedMatrix apply_mask(const DenseMatrix& x, double alpha, std::uint64_t seed) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("apply_mask: alpha outside [0, 1]");

  Rng rng(seed);
  MaskedMatrix out{DenseMatrix::Zero(x.rows(), x.cols()),
                   DenseMatrix::Zero(x.rows(), x.cols()), alpha};
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (rng.bernoulli(alpha)) {
        out.mask(i, j) = 1.0;
        out.observed(i, j) = x(i, j);
      }
    }
  }
  return out;
}

inline void validate(const DatasetParams& p) {
  if (p.m < 1 || p.n < 1) throw InvalidInput("dataset: m and n must be positive");
  if (p.rank < 1 || p.rank > std::min(p.m, p.n)) throw InvalidInput("dataset: rank out of range");
  if (p.sparsity < 1 || p.sparsity > p.n) throw InvalidInput("dataset: sparsity out of range");
  if (!(p.alpha >= 0.0 && p.alpha <= 1.0)) throw InvalidInput("dataset: alpha outside [0, 1]");
  if (!(p.noise_sigma >= 0.0) || !std::isfinite(p.noise_sigma))
    throw InvalidInput("dataset: noise_sigma must be finite and >= 0");
}

inline Dataset gen_dataset(const DatasetParams& p, std::uint64_t seed) {
  validate(p);
  Dataset ds;
  ds.params = p;
  ds.seed = seed;
  ds.oracle = gen_low_rank(p.m, p.n, p.rank, seed);
  ds.beta_true = gen_sparse_beta(p.n, p.sparsity, seed + 3);

  Rng noise(seed + 4);
  ds.labels = ds.oracle * ds.beta_true.values;
  for (Eigen::Index i = 0; i < p.m; ++i) ds.labels(i) += p.noise_sigma * noise.gaussian();

  ds.masked = apply_mask(ds.oracle, p.alpha, seed + 5);
  return ds;
}

}  // namespace sparsemiss
