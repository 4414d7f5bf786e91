#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <type_traits>
#include <string>
#include <vector>

namespace subcycle::io {

/// Shortest-form-free fixed formatting used by every CSV: 12 significant digits.
std::string fmt12(double value);

/// Writes '#'-prefixed provenance lines, one per entry ("key = value").
void write_comment_header(std::ostream& out,
                          const std::vector<std::pair<std::string, std::string>>& entries);

template <typename T>
void put_le(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T> && sizeof(T) == 8);
    auto bits = std::bit_cast<std::uint64_t>(value);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

template <typename T>
T get_le(std::istream& in) {
    static_assert(std::is_trivially_copyable_v<T> && sizeof(T) == 8);
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("unexpected end of binary stream");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<T>(bits);
}

/// Minimal CSV reader: skips '#' lines, returns the header names and numeric rows.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);

}  // namespace subcycle::io
