#include "actrec/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace actrec {

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kMagic = "actrec-checkpoint";

// Serializes as little-endian regardless of host order.
void put_f32(std::vector<unsigned char>& out, float f) {
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    out.push_back(static_cast<unsigned char>(bits & 0xff));
    out.push_back(static_cast<unsigned char>((bits >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((bits >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((bits >> 24) & 0xff));
}

float get_f32(const unsigned char* p) {
    uint32_t bits = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                    (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::map<std::string, ad::Array>& tensors) {
    std::vector<unsigned char> payload;
    std::ostringstream index;
    size_t offset = 0;
    for (const auto& [name, a] : tensors) {
        index << "tensor " << name << ' ' << a.rank();
        for (int d : a.shape) index << ' ' << d;
        index << ' ' << offset << '\n';
        for (ad::Real x : a.v) put_f32(payload, static_cast<float>(x));
        offset = payload.size();
    }
    const uint64_t checksum = fnv1a64(payload.data(), payload.size());

    std::ofstream f(path, std::ios::binary);
    if (!f) fail("checkpoint: cannot open '", path, "' for writing");
    f << kMagic << '\n'
      << "format " << kFormatVersion << '\n'
      << "checksum " << hex64(checksum) << '\n'
      << "count " << tensors.size() << '\n'
      << index.str() << "data\n";
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
    if (!f) fail("checkpoint: write failed for '", path, "'");
}

std::map<std::string, ad::Array> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail("checkpoint: cannot open '", path, "'");
    std::string line;
    auto next = [&](const char* what) {
        if (!std::getline(f, line)) fail("checkpoint '", path, "': truncated header, expected ", what);
        return line;
    };
    if (next("magic") != kMagic) fail("checkpoint '", path, "': bad magic line '", line, "'");
    int version = -1;
    {
        std::istringstream is(next("format"));
        std::string key;
        is >> key >> version;
        if (key != "format" || version != kFormatVersion)
            fail("checkpoint '", path, "': unsupported format line '", line, "'");
    }
    std::string checksum_hex;
    {
        std::istringstream is(next("checksum"));
        std::string key;
        is >> key >> checksum_hex;
        if (key != "checksum" || checksum_hex.size() != 16)
            fail("checkpoint '", path, "': bad checksum line '", line, "'");
    }
    size_t count = 0;
    {
        std::istringstream is(next("count"));
        std::string key;
        is >> key >> count;
        if (key != "count") fail("checkpoint '", path, "': bad count line '", line, "'");
    }
    struct Entry {
        std::string name;
        ad::Shape shape;
        size_t offset;
    };
    std::vector<Entry> entries;
    for (size_t i = 0; i < count; ++i) {
        std::istringstream is(next("tensor line"));
        std::string key;
        Entry e;
        int rank = 0;
        is >> key >> e.name >> rank;
        if (key != "tensor" || rank < 0) fail("checkpoint '", path, "': bad tensor line '", line, "'");
        e.shape.resize(static_cast<size_t>(rank));
        for (int d = 0; d < rank; ++d) is >> e.shape[static_cast<size_t>(d)];
        is >> e.offset;
        if (!is) fail("checkpoint '", path, "': bad tensor line '", line, "'");
        entries.push_back(std::move(e));
    }
    if (next("data marker") != "data") fail("checkpoint '", path, "': missing data marker");

    std::vector<unsigned char> payload((std::istreambuf_iterator<char>(f)),
                                       std::istreambuf_iterator<char>());
    if (hex64(fnv1a64(payload.data(), payload.size())) != checksum_hex)
        fail("checkpoint '", path, "': checksum mismatch, file is corrupt");

    std::map<std::string, ad::Array> out;
    for (const Entry& e : entries) {
        const long long n = ad::shape_size(e.shape);
        if (e.offset + static_cast<size_t>(n) * 4 > payload.size())
            fail("checkpoint '", path, "': tensor '", e.name, "' exceeds payload");
        ad::Array a(e.shape);
        for (long long i = 0; i < n; ++i)
            a.at(static_cast<int>(i)) =
                static_cast<ad::Real>(get_f32(payload.data() + e.offset + static_cast<size_t>(i) * 4));
        out.emplace(e.name, std::move(a));
    }
    return out;
}

void load_into(const std::map<std::string, ad::Array>& tensors, const ParamList& params) {
    for (Parameter* p : params) {
        auto it = tensors.find(p->name);
        if (it == tensors.end()) fail("checkpoint: missing tensor '", p->name, "'");
        if (it->second.shape != p->value.shape)
            fail("checkpoint: tensor '", p->name, "' has shape ", shape_str(it->second.shape),
                 ", expected ", shape_str(p->value.shape));
        p->value = it->second;
    }
}

}  // namespace actrec
