#pragma once

#include <stdexcept>
#include <string>

namespace sbmre {

// Shape mismatch between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Input outside the mathematical domain of an operation (non-finite data, log of a nonpositive value).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Factorization or solve failure that survives regularization.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A SystemConfig / ExperimentSpec violates its invariants.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Not enough observation windows to form the requested statistic.
struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sbmre
