#ifndef ACTREC_CHECKPOINT_HPP
#define ACTREC_CHECKPOINT_HPP

#include <map>
#include <string>

#include "actrec/params.hpp"

namespace actrec {

// Container of named arrays: a textual header (format version, payload checksum,
// one line per tensor with name/shape/offset) followed by raw little-endian
// 32-bit reals in row-major order. Values round-trip exactly through float.
void save_checkpoint(const std::string& path, const std::map<std::string, ad::Array>& tensors);
std::map<std::string, ad::Array> load_checkpoint(const std::string& path);

inline std::map<std::string, ad::Array> to_tensor_map(const ParamList& params) {
    std::map<std::string, ad::Array> m;
    for (const Parameter* p : params) {
        if (m.count(p->name)) fail("checkpoint: duplicate parameter name '", p->name, "'");
        m.emplace(p->name, p->value);
    }
    return m;
}

// Fills existing parameters from a tensor map, checking shapes.
void load_into(const std::map<std::string, ad::Array>& tensors, const ParamList& params);

}  // namespace actrec

#endif
