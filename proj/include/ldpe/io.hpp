#pragma once

#include "ldpe/inference.hpp"
#include "ldpe/types.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace ldpe {

/// Shortest decimal representation that round-trips the double exactly.
std::string format_double(double value);

/// Rectangular numeric CSV, no header unless skip_header. Throws IoError with
/// the offending row/column on malformed input.
Matrix read_csv_matrix(const std::string& path, bool skip_header = false);

/// Single numeric column (one value per line).
Vector read_csv_vector(const std::string& path, bool skip_header = false);

/// Writes content to a temporary file in the same directory, then renames; no
/// partial files survive an error.
void atomic_write(const std::string& path, const std::string& content);

/// The fit schema used by the CLI and by downstream tooling.
std::string fit_to_json(const LdpeFit& fit, double alpha,
                        std::optional<std::uint64_t> seed = std::nullopt);
std::string fit_to_csv(const LdpeFit& fit, double alpha);

}  // namespace ldpe
