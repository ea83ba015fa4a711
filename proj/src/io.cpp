#include "lrom/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "artifact files are little-endian");

namespace lrom::io {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path.string());
    return in;
}

}  // namespace

void write_f64(const std::filesystem::path& path, const double* data,
               std::size_t count) {
    auto out = open_out(path);
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(double)));
    if (!out) throw io_error("write failed: " + path.string());
}

void write_f64(const std::filesystem::path& path, const Vector& v) {
    write_f64(path, v.data(), static_cast<std::size_t>(v.size()));
}

void write_f64(const std::filesystem::path& path, const Matrix& m) {
    write_f64(path, m.data(), static_cast<std::size_t>(m.size()));
}

std::vector<double> read_f64(const std::filesystem::path& path) {
    auto in = open_in(path);
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    if (bytes % sizeof(double) != 0) {
        throw io_error("truncated f64 array: " + path.string());
    }
    std::vector<double> data(bytes / sizeof(double));
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(bytes));
    if (!in) throw io_error("read failed: " + path.string());
    return data;
}

Vector read_vector(const std::filesystem::path& path, Index n) {
    const std::vector<double> data = read_f64(path);
    if (static_cast<Index>(data.size()) != n) {
        throw io_error("array length mismatch in " + path.string());
    }
    return Eigen::Map<const Vector>(data.data(), n);
}

Matrix read_matrix(const std::filesystem::path& path, Index rows, Index cols) {
    const std::vector<double> data = read_f64(path);
    if (static_cast<Index>(data.size()) != rows * cols) {
        throw io_error("array shape mismatch in " + path.string());
    }
    return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

void write_i64(const std::filesystem::path& path,
               const std::vector<std::int64_t>& v) {
    auto out = open_out(path);
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(std::int64_t)));
    if (!out) throw io_error("write failed: " + path.string());
}

std::vector<std::int64_t> read_i64(const std::filesystem::path& path) {
    auto in = open_in(path);
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    if (bytes % sizeof(std::int64_t) != 0) {
        throw io_error("truncated i64 array: " + path.string());
    }
    std::vector<std::int64_t> data(bytes / sizeof(std::int64_t));
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(bytes));
    if (!in) throw io_error("read failed: " + path.string());
    return data;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    auto out = open_out(path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw io_error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ostringstream ss;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c > 0) ss << ',';
        ss << table.header[c];
    }
    ss << '\n';
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) {
            throw io_error("csv row width mismatch");
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) ss << ',';
            ss << format_full(row[c]);
        }
        ss << '\n';
    }
    write_text(path, ss.str());
}

CsvTable read_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw io_error("empty csv: " + path.string());
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) table.header.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream rs(line);
        while (std::getline(rs, cell, ',')) {
            row.push_back(std::strtod(cell.c_str(), nullptr));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace lrom::io
