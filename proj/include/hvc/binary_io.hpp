#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "hvc/common.hpp"

// Little-endian primitives shared by the HVCR and HVC1 containers.
namespace hvc::binary {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

inline void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_f64(std::ostream& out, const double* values, std::size_t n) {
    out.write(reinterpret_cast<const char*>(values), static_cast<std::streamsize>(n * sizeof(double)));
}

inline void read_exact(std::istream& in, void* dst, std::size_t n, const char* what) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw IoError(std::string("truncated payload: ") + what);
}

inline std::uint32_t read_u32(std::istream& in, const char* what) {
    std::uint32_t v = 0;
    read_exact(in, &v, sizeof v, what);
    return v;
}

inline std::uint64_t read_u64(std::istream& in, const char* what) {
    std::uint64_t v = 0;
    read_exact(in, &v, sizeof v, what);
    return v;
}

}  // namespace hvc::binary
