#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace regmod {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// A value in (-inf, +inf]. Proper functions never take -inf, so the type
/// refuses to hold it.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;

  explicit ExtendedReal(double value) : value_(value) {
    if (std::isnan(value) || value == -kInfinity) {
      throw std::domain_error("ExtendedReal: value must be finite or +infinity");
    }
  }

  static ExtendedReal plus_infinity() { return ExtendedReal(kInfinity); }

  [[nodiscard]] bool is_finite() const { return value_ != kInfinity; }
  [[nodiscard]] double value() const { return value_; }

  friend bool operator==(const ExtendedReal&, const ExtendedReal&) = default;

 private:
  double value_ = 0.0;
};

}  // namespace regmod
