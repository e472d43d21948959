#pragma once
// Little-endian binary stream helpers for index and checkpoint files.

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "genret/common.hpp"

namespace genret::binio {

template <typename T>
inline void write_pod(std::ostream& os, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    os.write(buf, sizeof(T));
}

template <typename T>
inline T read_pod(std::istream& is) {
    static_assert(std::is_trivially_copyable_v<T>);
    char buf[sizeof(T)];
    is.read(buf, sizeof(T));
    if (!is) throw DataError("unexpected end of file");
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
}

template <typename T>
inline void write_vec(std::ostream& os, const std::vector<T>& v) {
    write_pod<std::uint64_t>(os, v.size());
    if (!v.empty())
        os.write(reinterpret_cast<const char*>(v.data()),
                 std::streamsize(v.size() * sizeof(T)));
}

template <typename T>
inline std::vector<T> read_vec(std::istream& is) {
    auto n = read_pod<std::uint64_t>(is);
    std::vector<T> v(n);
    if (n) {
        is.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(T)));
        if (!is) throw DataError("unexpected end of file");
    }
    return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_pod<std::uint64_t>(os, s.size());
    os.write(s.data(), std::streamsize(s.size()));
}

inline std::string read_string(std::istream& is) {
    auto n = read_pod<std::uint64_t>(is);
    std::string s(n, '\0');
    if (n) {
        is.read(s.data(), std::streamsize(n));
        if (!is) throw DataError("unexpected end of file");
    }
    return s;
}

}  // namespace genret::binio
