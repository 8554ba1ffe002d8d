#pragma once

#include <stdexcept>
#include <string>

namespace bregman {

/// Operand shapes do not fit together.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A target lies outside the effective domain of the activation's penalty.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A training run produced a non-finite objective.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bregman
