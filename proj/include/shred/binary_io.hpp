#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "shred/error.hpp"

namespace shred::io {

static_assert(std::endian::native == std::endian::little,
              "binary containers are written in host order and assume little-endian");

inline void write_u16(std::ostream& os, std::uint16_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_f64(std::ostream& os, double v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_string(std::ostream& os, const std::string& s) {
    write_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline void write_f64_array(std::ostream& os, const double* p, std::size_t n) {
    os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

/// Writes rows*cols doubles in row-major order.
inline void write_matrix_rowmajor(std::ostream& os, const Eigen::MatrixXd& m) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
    write_f64_array(os, rm.data(), static_cast<std::size_t>(rm.size()));
}

inline void read_exact(std::istream& is, void* dst, std::size_t n) {
    is.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) {
        throw FormatError("unexpected end of file");
    }
}
inline std::uint16_t read_u16(std::istream& is) {
    std::uint16_t v;
    read_exact(is, &v, sizeof v);
    return v;
}
inline std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v;
    read_exact(is, &v, sizeof v);
    return v;
}
inline double read_f64(std::istream& is) {
    double v;
    read_exact(is, &v, sizeof v);
    return v;
}
inline std::string read_string(std::istream& is, std::size_t max_len = 1 << 16) {
    const auto n = read_u64(is);
    if (n > max_len) throw FormatError("string length " + std::to_string(n) + " too large");
    std::string s(n, '\0');
    read_exact(is, s.data(), n);
    return s;
}

/// Reads a row-major payload. A payload that ends on a row boundary short of
/// the declared row count is a header/payload mismatch (DimensionError); any
/// other short read is a truncated file (FormatError).
inline Eigen::MatrixXd read_matrix_rowmajor(std::istream& is, std::uint64_t rows, std::uint64_t cols) {
    if (rows > (1ull << 32) || cols > (1ull << 32) || rows * cols > (1ull << 34)) {
        throw DimensionError("implausible matrix header " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(
        static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const std::size_t bytes = static_cast<std::size_t>(rows * cols) * sizeof(double);
    is.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(bytes));
    const auto got = static_cast<std::size_t>(is.gcount());
    if (got != bytes) {
        const std::size_t row_bytes = static_cast<std::size_t>(cols) * sizeof(double);
        if (row_bytes > 0 && got > 0 && got % row_bytes == 0) {
            throw DimensionError("header declares " + std::to_string(rows) + " rows, payload holds " +
                                 std::to_string(got / row_bytes));
        }
        throw FormatError("truncated matrix payload");
    }
    return rm;
}

inline void write_magic(std::ostream& os, const char (&magic)[5]) { os.write(magic, 4); }

inline void expect_magic(std::istream& is, const char (&magic)[5]) {
    char buf[4] = {};
    is.read(buf, 4);
    if (is.gcount() != 4 || std::memcmp(buf, magic, 4) != 0) {
        throw FormatError(std::string("bad magic, expected ") + magic);
    }
}

} // namespace shred::io
