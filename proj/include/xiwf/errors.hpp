#pragma once

#include <stdexcept>
#include <string>

namespace xiwf {

/// An intensity integral diverges without a positive floor.
class InfiniteIntensity : public std::domain_error {
 public:
  InfiniteIntensity() : std::domain_error("infinite-intensity: floor required") {}
};

/// An exact enumeration was requested outside its size budget.
class BudgetExceeded : public std::length_error {
 public:
  explicit BudgetExceeded(const std::string& what) : std::length_error(what) {}
};

}  // namespace xiwf
