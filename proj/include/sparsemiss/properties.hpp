#pragma once

// Randomized invariant checks over the public operations. Used by the
// `verify` subcommand and the acceptance suite.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sparsemiss/completion.hpp"
#include "sparsemiss/datagen.hpp"
#include "sparsemiss/linalg.hpp"
#include "sparsemiss/rng.hpp"
#include "sparsemiss/solvers.hpp"

namespace sparsemiss {

struct PropertyReport {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string first_failure;

  bool passed() const { return cases > 0 && failures == 0; }
};

namespace detail {

inline DenseMatrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  DenseMatrix a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = rng.gaussian();
  return a;
}

inline Vector random_vector(Rng& rng, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.gaussian();
  return v;
}

inline Eigen::Index between(Rng& rng, Eigen::Index lo, Eigen::Index hi) {
  return lo + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

inline PropertyReport run_cases(const std::string& name, std::size_t cases, std::uint64_t seed,
                                const std::function<std::string(Rng&, std::size_t)>& check) {
  PropertyReport rep{name};
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng(mix_seed(seed, c));
    ++rep.cases;
    std::string failure;
    try {
      failure = check(rng, c);
    } catch (const std::exception& e) {
      failure = std::string("exception: ") + e.what();
    }
    if (!failure.empty()) {
      if (rep.failures++ == 0) rep.first_failure = "case " + std::to_string(c) + ": " + failure;
    }
  }
  return rep;
}

}  // namespace detail

inline PropertyReport check_hard_threshold_idempotent(std::size_t cases, std::uint64_t seed) {
  return detail::run_cases("hard_threshold idempotence", cases, seed, [](Rng& rng, std::size_t) {
    const Vector v = detail::random_vector(rng, detail::between(rng, 1, 200));
    const double t = 2.0 * rng.uniform();
    const Vector once = hard_threshold(v, t);
    return hard_threshold(once, t) == once ? std::string{} : "second pass changed the vector";
  });
}

inline PropertyReport check_iht_sparsity(std::size_t cases, std::uint64_t seed) {
  return detail::run_cases("IHT sparsity bound", cases, seed, [](Rng& rng, std::size_t) {
    const Eigen::Index m = detail::between(rng, 5, 60), n = detail::between(rng, 2, 40);
    const DenseMatrix x = detail::random_matrix(rng, m, n);
    const Vector y = detail::random_vector(rng, m);
    IhtConfig cfg;
    cfg.sparsity = detail::between(rng, 1, n);
    cfg.max_iters = 50;
    const auto res = iht_recover(x, y, cfg);
    const auto nnz = static_cast<Eigen::Index>(support(res.beta_hat).size());
    return nnz <= cfg.sparsity ? std::string{}
                               : std::to_string(nnz) + " nonzeros > s=" + std::to_string(cfg.sparsity);
  });
}

inline PropertyReport check_lasso_monotone(std::size_t cases, std::uint64_t seed) {
  return detail::run_cases("LASSO per-sweep objective monotonicity", cases, seed,
                           [](Rng& rng, std::size_t) {
    const Eigen::Index m = detail::between(rng, 5, 60), n = detail::between(rng, 2, 40);
    const DenseMatrix x = detail::random_matrix(rng, m, n);
    const Vector y = detail::random_vector(rng, m);
    LassoConfig cfg{std::pow(10.0, -3.0 + 4.0 * rng.uniform()), 500, 1e-9};
    const auto res = lasso_solve(x, y, cfg);
    const double start = y.squaredNorm();  // objective at beta = 0
    double prev = start;
    for (std::size_t k = 0; k < res.objective_trace.size(); ++k) {
      const double f = res.objective_trace[k];
      if (f > prev + 1e-10 * std::max(1.0, start))
        return "objective rose at sweep " + std::to_string(k + 1);
      prev = f;
    }
    const double direct = lasso_objective(x, y, res.beta_hat, cfg.penalty);
    if (std::abs(direct - res.objective_trace.back()) > 1e-8 * std::max(1.0, start))
      return std::string("tracked objective disagrees with direct evaluation");
    return std::string{};
  });
}

inline PropertyReport check_svd_reconstruction(std::size_t cases, std::uint64_t seed) {
  return detail::run_cases("SVD reconstruction 1e-8", cases, seed, [](Rng& rng, std::size_t) {
    const Eigen::Index m = detail::between(rng, 1, 40), n = detail::between(rng, 1, 40);
    DenseMatrix a = detail::random_matrix(rng, m, n) * std::pow(10.0, -3.0 + 6.0 * rng.uniform());
    const SvdFactors f = svd(a);
    const double rel = (f.u * f.singular_values.asDiagonal() * f.v.transpose() - a).norm() /
                       std::max(1.0, a.norm());
    if (rel > 1e-8) return "relative reconstruction error " + std::to_string(rel);
    const Eigen::Index k = std::min(m, n);
    const double orth_u = (f.u.transpose() * f.u - DenseMatrix::Identity(k, k)).cwiseAbs().maxCoeff();
    const double orth_v = (f.v.transpose() * f.v - DenseMatrix::Identity(k, k)).cwiseAbs().maxCoeff();
    if (orth_u > 1e-10 || orth_v > 1e-10) return std::string("factors not orthonormal");
    for (Eigen::Index i = 0; i < k; ++i) {
      if (f.singular_values(i) < 0.0) return std::string("negative singular value");
      if (i > 0 && f.singular_values(i) > f.singular_values(i - 1))
        return std::string("singular values not sorted");
    }
    return std::string{};
  });
}

inline PropertyReport check_mask_fraction(std::size_t cases, std::uint64_t seed) {
  return detail::run_cases("mask fraction concentration", cases, seed, [](Rng& rng, std::size_t c) {
    const double alpha = rng.uniform();
    const DenseMatrix x = DenseMatrix::Ones(1000, 100);
    const MaskedMatrix mm = apply_mask(x, alpha, rng.next_u64() ^ c);
    const double frac = mm.mask.mean();
    if (std::abs(frac - alpha) > 0.01)
      return "fraction " + std::to_string(frac) + " vs alpha " + std::to_string(alpha);
    if (((mm.mask.array() == 0.0).cast<double>() * mm.observed.array().abs()).sum() != 0.0)
      return std::string("observed value at a masked position");
    return std::string{};
  });
}

inline PropertyReport check_spectral_norm_bound(std::size_t cases, std::uint64_t seed) {
  return detail::run_cases("spectral norm bounds ||Ax||/||x||", cases, seed, [](Rng& rng, std::size_t) {
    const Eigen::Index m = detail::between(rng, 1, 30), n = detail::between(rng, 1, 30);
    const DenseMatrix a = detail::random_matrix(rng, m, n);
    const double s = spectral_norm(a);
    for (int k = 0; k < 100; ++k) {
      Vector x = detail::random_vector(rng, n);
      x.normalize();
      if ((a * x).norm() > s * (1.0 + 1e-12)) return std::string("||Ax|| exceeded the spectral norm");
    }
    return std::string{};
  });
}

inline PropertyReport check_soft_impute_monotone(std::size_t cases, std::uint64_t seed) {
  return detail::run_cases("soft-impute objective monotonicity", cases, seed, [](Rng& rng, std::size_t c) {
    const Eigen::Index m = detail::between(rng, 8, 40), n = detail::between(rng, 8, 40);
    const Eigen::Index r = detail::between(rng, 1, std::min(m, n) / 2);
    const DenseMatrix x = gen_low_rank(m, n, r, rng.next_u64());
    const MaskedMatrix mm = apply_mask(x, 0.5 + 0.4 * rng.uniform(), rng.next_u64() ^ c);
    if (mm.mask.sum() < 1.0) return std::string{};
    const CompletionConfig cfg{std::pow(10.0, -3.0 + 2.0 * rng.uniform()), 100, 1e-9, false};
    const auto res = soft_impute(mm, cfg);
    for (std::size_t k = 1; k < res.objective_trace.size(); ++k) {
      const double prev = res.objective_trace[k - 1];
      if (res.objective_trace[k] > prev + 1e-10 * std::max(1.0, prev))
        return "objective rose at iteration " + std::to_string(k + 1);
    }
    return std::string{};
  });
}

/// Every property above, `cases` random instances each.
inline std::vector<PropertyReport> run_property_suite(std::size_t cases, std::uint64_t seed) {
  return {check_hard_threshold_idempotent(cases, seed),
          check_iht_sparsity(cases, seed + 1),
          check_lasso_monotone(cases, seed + 2),
          check_svd_reconstruction(cases, seed + 3),
          check_mask_fraction(cases, seed + 4),
          check_spectral_norm_bound(cases, seed + 5),
          check_soft_impute_monotone(cases, seed + 6)};
}

}  // namespace sparsemiss
