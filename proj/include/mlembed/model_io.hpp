#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "mlembed/model.hpp"

namespace mlembed {

/// Parses and validates a portable model document (format_version "1").
/// GP caches are computed; CRS polytopes are certified by LP.
TrainedModel load_model(std::string_view document);
TrainedModel load_model_file(const std::filesystem::path& path);

/// Serializes back into the portable format (pretty-printed, stable key order).
std::string dump_model(const TrainedModel& model);

/// Reads a whitespace-separated numeric points file; every row must hold
/// `dim` values. Errors name the 1-based row.
std::vector<std::vector<double>> parse_points(std::string_view text, std::size_t dim);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace mlembed
