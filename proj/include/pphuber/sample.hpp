#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pphuber {

/// Ordered, non-empty collection of finite observations.
class Sample {
 public:
  explicit Sample(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) {
      throw std::invalid_argument("sample must contain at least one observation");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw std::invalid_argument("sample value at index " + std::to_string(i) +
                                    " is not finite");
      }
    }
  }

  Sample(std::initializer_list<double> values) : Sample(std::vector<double>(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  /// True when every observation equals the first one.
  bool all_identical() const noexcept {
    for (double v : values_) {
      if (v != values_.front()) return false;
    }
    return true;
  }

 private:
  std::vector<double> values_;
};

}  // namespace pphuber
