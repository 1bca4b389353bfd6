#include "model_io.hpp"

#include "mfcf/error.hpp"

#include <charconv>
#include <cmath>

namespace mfcf::io {

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void write_scalar(std::ostream& out, std::string_view name, double v) {
    out << "scalar " << name << ' ' << format_double(v) << '\n';
}

void write_vector(std::ostream& out, std::string_view name, std::span<const double> v) {
    out << "vector " << name << ' ' << v.size() << '\n';
    for (std::size_t i = 0; i < v.size(); ++i) {
        out << (i == 0 ? "" : " ") << format_double(v[i]);
    }
    out << '\n';
}

void write_matrix(std::ostream& out, std::string_view name, const Matrix& m) {
    out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << (c == 0 ? "" : " ") << format_double(row[c]);
        }
        out << '\n';
    }
}

std::string Reader::token() {
    std::string t;
    if (!(in_ >> t)) {
        throw FormatError("model dump ended unexpectedly");
    }
    return t;
}

void Reader::expect(std::string_view keyword) {
    const std::string t = token();
    if (t != keyword) {
        throw FormatError("model dump: expected '" + std::string(keyword) + "', found '" + t + "'");
    }
}

std::uint64_t Reader::read_uint() {
    const std::string t = token();
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw FormatError("model dump: bad integer '" + t + "'");
    }
    return v;
}

double Reader::read_double() {
    const std::string t = token();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw FormatError("model dump: bad number '" + t + "'");
    }
    return v;
}

double Reader::scalar(std::string_view name) {
    expect("scalar");
    expect(name);
    return read_double();
}

std::vector<double> Reader::vector(std::string_view name) {
    expect("vector");
    expect(name);
    const auto n = read_uint();
    std::vector<double> v(n);
    for (auto& x : v) {
        x = read_double();
    }
    return v;
}

Matrix Reader::matrix(std::string_view name) {
    expect("matrix");
    expect(name);
    const auto rows = read_uint();
    const auto cols = read_uint();
    Matrix m(rows, cols);
    for (auto& x : m.values()) {
        x = read_double();
    }
    return m;
}

} // namespace mfcf::io
