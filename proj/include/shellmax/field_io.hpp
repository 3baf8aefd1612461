#pragma once

// ADF1 field file format.
//
// Layout, all little endian, no padding:
//   bytes 0..3   magic 'A','D','F','1'
//   u32          version (= 1)
//   u32          d
//   u32          n (same for every axis)
//   f64          box_length
//   n^d * f64    values, row-major, axis 0 slowest

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "shellmax/grid.hpp"

namespace shellmax {

struct DecodeError : std::runtime_error {
    explicit DecodeError(const std::string& msg) : std::runtime_error("ADF1 decode: " + msg) {}
};

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "ADF1 I/O assumes a little-endian host");

inline void put_u32(std::string& buf, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    buf.append(b, 4);
}

inline void put_f64(std::string& buf, double v) {
    char b[8];
    std::memcpy(b, &v, 8);
    buf.append(b, 8);
}

}  // namespace detail

inline void write_field(const Field& f, const std::string& path) {
    std::string buf;
    buf.reserve(24 + 8 * f.size());
    buf.append("ADF1", 4);
    detail::put_u32(buf, 1u);
    detail::put_u32(buf, static_cast<std::uint32_t>(f.grid.dim));
    detail::put_u32(buf, static_cast<std::uint32_t>(f.grid.n));
    detail::put_f64(buf, f.grid.box_length);
    buf.append(reinterpret_cast<const char*>(f.values.data()), 8 * f.size());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_field: cannot open " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("write_field: short write to " + path);
}

inline Field read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DecodeError("cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 24) throw DecodeError("truncated header");
    if (buf.compare(0, 4, "ADF1") != 0) throw DecodeError("bad magic");
    std::uint32_t version, d, n;
    std::memcpy(&version, buf.data() + 4, 4);
    std::memcpy(&d, buf.data() + 8, 4);
    std::memcpy(&n, buf.data() + 12, 4);
    double box;
    std::memcpy(&box, buf.data() + 16, 8);
    if (version != 1) throw DecodeError("unsupported version " + std::to_string(version));
    GridSpec g;
    try {
        g = make_grid(static_cast<int>(d), static_cast<int>(n), box);
    } catch (const std::invalid_argument& e) {
        throw DecodeError(std::string("invalid header: ") + e.what());
    }
    const std::size_t expect = 24 + 8 * g.cell_count();
    if (buf.size() != expect)
        throw DecodeError("payload size mismatch: got " + std::to_string(buf.size()) +
                          " bytes, expected " + std::to_string(expect));
    Field f = make_field(g);
    std::memcpy(f.values.data(), buf.data() + 24, 8 * f.size());
    require_finite(f, "read_field");
    return f;
}

}  // namespace shellmax
