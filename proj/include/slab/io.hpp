#pragma once

#include "slab/types.hpp"

#include <json.hpp>

#include <string>
#include <variant>
#include <vector>

namespace slab {

using CsvCell = std::variant<double, std::int64_t, std::string, bool>;
using CsvRow = std::vector<CsvCell>;

// Shortest decimal form that round-trips to the identical double.
std::string format_double(double v);

// CSV with a fixed header, LF line endings, full-precision floats.
// An empty record set produces a header-only file.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<CsvRow>& rows);

// Minimal CSV reader for round-trip tests and joins (no quoting/escapes;
// values in this project never contain commas).
std::vector<std::vector<std::string>> read_csv(const std::string& path);

void write_json(const std::string& path, const nlohmann::json& doc);

// Manifest skeleton: effective config echo, seed, library versions, wall
// clock. Callers add experiment-specific entries before writing.
nlohmann::json manifest_base(const nlohmann::json& effective_config, std::uint64_t seed);

void ensure_directory(const std::string& path);

}  // namespace slab
