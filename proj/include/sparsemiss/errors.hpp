#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sparsemiss {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on arguments was violated (bad shape, out-of-range value).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed to reach its accuracy target.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// QR factorization met a column that is numerically dependent on earlier ones.
class RankDeficiency : public Error {
 public:
  RankDeficiency(const std::string& what, std::size_t column)
      : Error(what + " (column " + std::to_string(column) + ")"), column_(column) {}

  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// An iterative solver produced a non-finite iterate.
class Divergence : public Error {
 public:
  Divergence(const std::string& solver, std::size_t iteration)
      : Error(solver + " diverged at iteration " + std::to_string(iteration)),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace sparsemiss
