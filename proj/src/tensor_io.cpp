// SPDX-License-Identifier: Apache-2.0

#include "s2o/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace s2o {

namespace {

static_assert(std::endian::native == std::endian::little,
              "S2OT I/O assumes a little-endian host");

constexpr char kMagic[4] = {'S', '2', 'O', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

}  // namespace

void save_tensor_file(const Tensor4& t, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(t.z));
    write_u32(out, static_cast<std::uint32_t>(t.h));
    write_u32(out, static_cast<std::uint32_t>(t.l));
    write_u32(out, static_cast<std::uint32_t>(t.d));
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

Tensor4 load_tensor_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open: " + path.string());
    }
    char magic[4] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("not an S2OT file");
    }
    const std::uint32_t version = read_u32(in);
    if (!in || version != kVersion) {
        throw std::runtime_error("unsupported version");
    }
    const std::uint32_t z = read_u32(in);
    const std::uint32_t h = read_u32(in);
    const std::uint32_t l = read_u32(in);
    const std::uint32_t d = read_u32(in);
    if (!in || z < 1 || h < 1 || l < 1 || d < 1) {
        throw std::runtime_error("size mismatch");
    }
    Tensor4 t(static_cast<std::int64_t>(z), static_cast<std::int64_t>(h),
              static_cast<std::int64_t>(l), static_cast<std::int64_t>(d));
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(t.data.size() * sizeof(float))) {
        throw std::runtime_error("size mismatch");
    }
    in.peek();
    if (!in.eof()) {
        throw std::runtime_error("size mismatch");
    }
    return t;
}

}  // namespace s2o
