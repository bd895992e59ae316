#include "slab/io.hpp"

#include <Eigen/Core>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace slab {

std::string format_double(double v) {
    char buf[40];
    // shortest representation that parses back bit-identically
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double parsed = 0;
        std::sscanf(buf, "%lf", &parsed);
        if (parsed == v || (std::isnan(parsed) && std::isnan(v))) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {
std::string cell_to_string(const CsvCell& cell) {
    if (std::holds_alternative<double>(cell)) return format_double(std::get<double>(cell));
    if (std::holds_alternative<std::int64_t>(cell))
        return std::to_string(std::get<std::int64_t>(cell));
    if (std::holds_alternative<bool>(cell)) return std::get<bool>(cell) ? "true" : "false";
    return std::get<std::string>(cell);
}
}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<CsvRow>& rows) {
    std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!out) throw numerical_error("write_csv: cannot open " + path + ": " + std::strerror(errno));
    for (std::size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw domain_error("write_csv: row width does not match header");
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << cell_to_string(row[i]);
        out << "\n";
    }
    if (!out) throw numerical_error("write_csv: write failed for " + path);
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw numerical_error("read_csv: cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        rows.push_back(std::move(cells));
    }
    return rows;
}

void write_json(const std::string& path, const nlohmann::json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw numerical_error("write_json: cannot open " + path + ": " + std::strerror(errno));
    out << doc.dump(2) << "\n";
    if (!out) throw numerical_error("write_json: write failed for " + path);
}

nlohmann::json manifest_base(const nlohmann::json& effective_config, std::uint64_t seed) {
    nlohmann::json m;
    m["config"] = effective_config;
    m["seed"] = seed;
    m["versions"] = {
        {"slab", "1.0.0"},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                      "." + std::to_string(EIGEN_MINOR_VERSION)},
    };
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    m["created_unix_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
    return m;
}

void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw numerical_error("ensure_directory: " + path + ": " + ec.message());
}

}  // namespace slab
