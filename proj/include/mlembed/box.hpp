#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mlembed {

/// Axis-aligned box [lower, upper] in model units.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  Box() = default;
  Box(std::vector<double> lo, std::vector<double> hi)
      : lower(std::move(lo)), upper(std::move(hi)) {}

  std::size_t size() const { return lower.size(); }
  double width(std::size_t i) const { return upper[i] - lower[i]; }

  bool contains(std::span<const double> x, double tol = 0.0) const;
  bool is_finite() const;
  std::vector<double> midpoint() const;

  // Throws ErrorKind::validation when lower >= upper in some dimension
  // (or lower > upper when allow_thin is set).
  void validate(const std::string& what, bool allow_thin = false) const;
};

}  // namespace mlembed
