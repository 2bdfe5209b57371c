#pragma once

// Dataset file format (little-endian, version 1):
//
//   offset  type        field
//   0       char[8]     magic "SPMSDS01"
//   8       u64 x 4     m, n, rank, sparsity
//   40      f64 x 2     alpha, noise_sigma
//   56      u64         seed
//   64      f64[m*n]    oracle X~, row-major
//   ...     u8[m*n]     mask B (0 or 1), row-major
//   ...     f64[m*n]    observed X = X~ (.) B, row-major
//   ...     f64[n]      beta
//   ...     f64[m]      labels Y
//
// The format stores doubles bit-for-bit, so a load returns an identical Dataset.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "sparsemiss/datagen.hpp"
#include "sparsemiss/errors.hpp"

namespace sparsemiss {

static_assert(std::endian::native == std::endian::little, "dataset I/O assumes little-endian");

inline constexpr std::array<char, 8> kDatasetMagic{'S', 'P', 'M', 'S', 'D', 'S', '0', '1'};

namespace detail {

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw InvalidInput("dataset file truncated");
  return v;
}

}  // namespace detail

inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidInput("cannot open " + path + " for writing");
  const auto& p = ds.params;
  os.write(kDatasetMagic.data(), kDatasetMagic.size());
  for (auto v : {p.m, p.n, p.rank, p.sparsity}) detail::put<std::uint64_t>(os, static_cast<std::uint64_t>(v));
  detail::put(os, p.alpha);
  detail::put(os, p.noise_sigma);
  detail::put<std::uint64_t>(os, ds.seed);
  for (Eigen::Index i = 0; i < p.m; ++i)
    for (Eigen::Index j = 0; j < p.n; ++j) detail::put(os, ds.oracle(i, j));
  for (Eigen::Index i = 0; i < p.m; ++i)
    for (Eigen::Index j = 0; j < p.n; ++j)
      detail::put<std::uint8_t>(os, ds.masked.mask(i, j) != 0.0 ? 1 : 0);
  for (Eigen::Index i = 0; i < p.m; ++i)
    for (Eigen::Index j = 0; j < p.n; ++j) detail::put(os, ds.masked.observed(i, j));
  for (Eigen::Index j = 0; j < p.n; ++j) detail::put(os, ds.beta_true.values(j));
  for (Eigen::Index i = 0; i < p.m; ++i) detail::put(os, ds.labels(i));
  if (!os) throw InvalidInput("failed writing " + path);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot open " + path);
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kDatasetMagic)
    throw InvalidInput(path + ": not a dataset file");

  Dataset ds;
  auto& p = ds.params;
  p.m = static_cast<Eigen::Index>(detail::get<std::uint64_t>(is));
  p.n = static_cast<Eigen::Index>(detail::get<std::uint64_t>(is));
  p.rank = static_cast<Eigen::Index>(detail::get<std::uint64_t>(is));
  p.sparsity = static_cast<Eigen::Index>(detail::get<std::uint64_t>(is));
  p.alpha = detail::get<double>(is);
  p.noise_sigma = detail::get<double>(is);
  ds.seed = detail::get<std::uint64_t>(is);
  validate(p);

  ds.oracle.resize(p.m, p.n);
  ds.masked.mask.resize(p.m, p.n);
  ds.masked.observed.resize(p.m, p.n);
  ds.masked.keep_probability = p.alpha;
  for (Eigen::Index i = 0; i < p.m; ++i)
    for (Eigen::Index j = 0; j < p.n; ++j) ds.oracle(i, j) = detail::get<double>(is);
  for (Eigen::Index i = 0; i < p.m; ++i)
    for (Eigen::Index j = 0; j < p.n; ++j) ds.masked.mask(i, j) = detail::get<std::uint8_t>(is);
  for (Eigen::Index i = 0; i < p.m; ++i)
    for (Eigen::Index j = 0; j < p.n; ++j) ds.masked.observed(i, j) = detail::get<double>(is);
  ds.beta_true.values.resize(p.n);
  for (Eigen::Index j = 0; j < p.n; ++j) ds.beta_true.values(j) = detail::get<double>(is);
  ds.beta_true.sparsity = static_cast<Eigen::Index>(support(ds.beta_true.values).size());
  ds.labels.resize(p.m);
  for (Eigen::Index i = 0; i < p.m; ++i) ds.labels(i) = detail::get<double>(is);
  return ds;
}

}  // namespace sparsemiss
