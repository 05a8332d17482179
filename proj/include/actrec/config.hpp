#ifndef ACTREC_CONFIG_HPP
#define ACTREC_CONFIG_HPP

#include <map>
#include <string>

#include "actrec/datagen.hpp"
#include "actrec/glimpse.hpp"
#include "actrec/posenet.hpp"

namespace actrec::cfg {

// Flat key=value configuration. Parsing is strict: a key outside the registry
// is an error. Every model/training constant lives here, so the full-scale and
// desk-scale setups differ only by which file is loaded.
class Config {
  public:
    static Config desk_preset();
    static Config full_preset();

    // Overlays `path` onto this config; '#' starts a comment.
    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);  // checked against the registry

    int geti(const std::string& key) const;
    ad::Real getr(const std::string& key) const;
    std::string gets(const std::string& key) const;
    bool getb(const std::string& key) const;

    std::string canonical() const;  // sorted key=value lines
    uint64_t hash() const { return fnv1a64(canonical()); }

    pose::PoseNetConfig pose_config(int tensor_width) const;
    rgb::GlimpseConfig glimpse_config() const;
    data::SyntheticSpec synthetic_spec(const skel::SkeletonTopology& topo, uint64_t seed) const;

  private:
    std::map<std::string, std::string> kv_;
};

}  // namespace actrec::cfg

#endif
