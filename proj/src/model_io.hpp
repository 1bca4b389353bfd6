#pragma once

// Token-level helpers for the text model dump. Numbers are written in the
// shortest form that parses back to the same double.

#include "mfcf/matrix.hpp"

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mfcf::io {

std::string format_double(double v);

void write_scalar(std::ostream& out, std::string_view name, double v);
void write_vector(std::ostream& out, std::string_view name, std::span<const double> v);
void write_matrix(std::ostream& out, std::string_view name, const Matrix& m);

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::string token();
    void expect(std::string_view keyword);
    std::uint64_t read_uint();
    double read_double();

    double scalar(std::string_view name);
    std::vector<double> vector(std::string_view name);
    Matrix matrix(std::string_view name);

private:
    std::istream& in_;
};

} // namespace mfcf::io
