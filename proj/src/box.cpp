#include "mlembed/box.hpp"

#include <cmath>

#include "mlembed/error.hpp"

namespace mlembed {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::validation: return "validation";
    case ErrorKind::domain: return "domain";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::config: return "config";
    case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

bool Box::contains(std::span<const double> x, double tol) const {
  if (x.size() != size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
  }
  return true;
}

bool Box::is_finite() const {
  for (std::size_t i = 0; i < size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i])) return false;
  }
  return true;
}

std::vector<double> Box::midpoint() const {
  std::vector<double> mid(size());
  for (std::size_t i = 0; i < size(); ++i) mid[i] = 0.5 * (lower[i] + upper[i]);
  return mid;
}

void Box::validate(const std::string& what, bool allow_thin) const {
  if (lower.size() != upper.size()) {
    fail(ErrorKind::dimension, what + ": box lower/upper length mismatch");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i])) {
      fail(ErrorKind::validation, what + ": NaN box bound in dimension " + std::to_string(i));
    }
    const bool bad = allow_thin ? lower[i] > upper[i] : !(lower[i] < upper[i]);
    if (bad) {
      fail(ErrorKind::validation,
           what + ": box lower bound not below upper bound in dimension " + std::to_string(i));
    }
  }
}

}  // namespace mlembed
