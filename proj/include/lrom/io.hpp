#pragma once

#include "lrom/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lrom::io {

/// Raw little-endian 64-bit arrays; dimensions live in the JSON metadata.
void write_f64(const std::filesystem::path& path, const double* data,
               std::size_t count);
void write_f64(const std::filesystem::path& path, const Vector& v);
void write_f64(const std::filesystem::path& path, const Matrix& m);  // col-major
std::vector<double> read_f64(const std::filesystem::path& path);
Vector read_vector(const std::filesystem::path& path, Index n);
Matrix read_matrix(const std::filesystem::path& path, Index rows, Index cols);

void write_i64(const std::filesystem::path& path,
               const std::vector<std::int64_t>& v);
std::vector<std::int64_t> read_i64(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Full 17-significant-digit formatting: the decimal round-trips to the
/// same double.
std::string format_full(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace lrom::io
