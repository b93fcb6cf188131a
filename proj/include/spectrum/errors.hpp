#pragma once

#include <stdexcept>
#include <string>

namespace spectrum {

// Bad market description: invalid probabilities, penalty family, demand model, ...
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside the mathematical domain of an operation (price, penalty, probability).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// A quantity that the theory guarantees finite/positive failed to be so numerically.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spectrum
