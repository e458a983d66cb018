#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ldpe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside its mathematical domain (probabilities, grid shapes, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A design column with zero norm cannot be standardized.
class ZeroColumnError : public Error {
 public:
  explicit ZeroColumnError(Index col)
      : Error("column " + std::to_string(col) + " has zero norm"), column(col) {}
  Index column;
};

/// The scaled-Lasso noise estimate collapsed to zero; the joint objective is ill-posed.
class DegenerateResponseError : public Error {
 public:
  DegenerateResponseError() : Error("residual norm collapsed; noise level is degenerate") {}
};

/// Every point of a Lasso path was degenerate, so no score vector exists.
class AllDegenerateError : public Error {
 public:
  explicit AllDegenerateError(Index col)
      : Error("all path points degenerate for column " + std::to_string(col)), column(col) {}
  Index column;
};

/// Scores were built for a different design matrix.
class ScoreMismatchError : public Error {
 public:
  ScoreMismatchError() : Error("score set was built on a different design (hash mismatch)") {}
};

/// Enumeration bounds exceeded and sampling mode was not requested.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Malformed external input (CSV parse failures and friends).
class IoError : public Error {
 public:
  using Error::Error;
};

/// aᵀVa fell below the numerical PSD tolerance.
class NegativeVarianceError : public Error {
 public:
  using Error::Error;
};

}  // namespace ldpe
