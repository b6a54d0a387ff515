#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cxhess {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition on an argument does not hold (index range, m out of range, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed data: non-Hermitian input, non-finite values, bad file contents.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Two fields that must share a grid do not.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// An eigenvalue vector left the operator's cone. Carries the failing inequality.
class ConeViolation : public Error {
 public:
  ConeViolation(std::string inequality, double margin)
      : Error("cone violation: " + inequality + " (margin " + std::to_string(margin) + ")"),
        inequality_(std::move(inequality)),
        margin_(margin) {}

  const std::string& inequality() const noexcept { return inequality_; }
  double margin() const noexcept { return margin_; }

 private:
  std::string inequality_;
  double margin_;
};

/// Damped Newton could not keep the iterate inside the cone; `point` is the witness.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t point)
      : Error(what + " (witness grid point " + std::to_string(point) + ")"), point_(point) {}
  std::size_t point() const noexcept { return point_; }

 private:
  std::size_t point_;
};

/// Iteration budget exhausted before the tolerance was met.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

}  // namespace cxhess
