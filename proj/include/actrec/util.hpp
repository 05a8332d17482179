#ifndef ACTREC_UTIL_HPP
#define ACTREC_UTIL_HPP

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace actrec {

// Appends the remaining arguments to a stream; used by fail()/cat().
inline void cat_into(std::ostringstream&) {}
template <typename T, typename... Rest>
void cat_into(std::ostringstream& os, T&& v, Rest&&... rest) {
    os << std::forward<T>(v);
    cat_into(os, std::forward<Rest>(rest)...);
}

template <typename... Args>
std::string cat(Args&&... args) {
    std::ostringstream os;
    cat_into(os, std::forward<Args>(args)...);
    return os.str();
}

template <typename... Args>
[[noreturn]] void fail(Args&&... args) {
    throw std::runtime_error(cat(std::forward<Args>(args)...));
}

inline std::string shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << 'x';
        os << s[i];
    }
    os << ']';
    return os.str();
}

// FNV-1a, 64 bit. Used for checkpoint checksums, config hashes and seed derivation.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

// Mixes a base seed with a tag (and optional indices) into an independent stream seed.
inline uint64_t derive_seed(uint64_t base, std::string_view tag) {
    uint64_t h = fnv1a64(tag);
    h = fnv1a64(&base, sizeof(base), h);
    // splitmix64 finalizer
    h += 0x9e3779b97f4a7c15ull;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
    return h ^ (h >> 31);
}

inline uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t index) {
    return derive_seed(derive_seed(base, tag), std::to_string(index));
}

inline std::string hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

}  // namespace actrec

#endif
