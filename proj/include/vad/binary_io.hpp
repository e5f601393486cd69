#pragma once

// Little-endian stream helpers shared by the binary containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "vad/error.hpp"

namespace vad::io {

static_assert(std::endian::native == std::endian::little, "containers assume a little-endian host");

template <class T>
    requires std::is_arithmetic_v<T>
void put(std::ostream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
    requires std::is_arithmetic_v<T>
T get(std::istream& is, std::string_view what) {
    T value{};
    if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) {
        throw DataError("truncated " + std::string(what));
    }
    return value;
}

inline void put_f32(std::ostream& os, std::span<const float> values) {
    os.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
}

inline void get_f32(std::istream& is, std::span<float> out, std::string_view what) {
    if (!is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size_bytes()))) {
        throw DataError("truncated payload in " + std::string(what));
    }
}

inline void put_magic(std::ostream& os, std::string_view magic, std::uint16_t version) {
    os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
    put<std::uint16_t>(os, version);
}

inline void expect_magic(std::istream& is, std::string_view magic, std::uint16_t version, std::string_view what) {
    std::string got(magic.size(), '\0');
    if (!is.read(got.data(), static_cast<std::streamsize>(got.size())) || got != magic) {
        throw DataError(std::string(what) + ": bad magic, expected " + std::string(magic));
    }
    const auto v = get<std::uint16_t>(is, what);
    if (v != version) {
        throw DataError(std::string(what) + ": unsupported version " + std::to_string(v));
    }
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path.string());
    return is;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write " + path.string());
    return os;
}

inline std::string read_rest(std::istream& is) {
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

inline std::string read_text(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_rest(is);
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
    auto os = open_out(path);
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!os) throw DataError("failed writing " + path.string());
}

}  // namespace vad::io
