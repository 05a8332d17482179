#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "actrec/checkpoint.hpp"
#include "doctest.h"

using namespace actrec;
using namespace actrec::ad;

namespace {
std::string tmp_path(const char* name) {
    return std::string("/tmp/actrec_test_") + name + "_" + std::to_string(::getpid());
}
std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}
}  // namespace

TEST_CASE("checkpoint round-trips values and bytes") {
    std::mt19937_64 rng(11);
    std::map<std::string, Array> t;
    Array a = Array::randn({3, 4}, rng);
    // quantize to float so the round trip is exact
    for (Real& v : a.v) v = static_cast<Real>(static_cast<float>(v));
    t.emplace("pose.conv1.w", a);
    t.emplace("rgb.out.b", Array({2}, {1.0, -0.5}));

    std::string p1 = tmp_path("ckpt1"), p2 = tmp_path("ckpt2");
    save_checkpoint(p1, t);
    auto back = load_checkpoint(p1);
    REQUIRE(back.size() == 2);
    CHECK(back.at("pose.conv1.w") == a);
    CHECK(back.at("rgb.out.b").at(1) == -0.5);

    save_checkpoint(p2, back);
    CHECK(slurp(p1) == slurp(p2));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("checkpoint detects payload corruption via checksum") {
    std::string p = tmp_path("ckpt_corrupt");
    std::map<std::string, Array> t;
    t.emplace("w", Array({4}, {1, 2, 3, 4}));
    save_checkpoint(p, t);
    {
        std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(-2, std::ios::end);
        f.put('\x7f');
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(p), doctest::Contains("checksum"), std::runtime_error);
    std::remove(p.c_str());
}

TEST_CASE("checkpoint load reports missing and mis-shaped tensors") {
    std::string p = tmp_path("ckpt_missing");
    std::map<std::string, Array> t;
    t.emplace("a", Array({2}, {1, 2}));
    save_checkpoint(p, t);
    auto back = load_checkpoint(p);

    Parameter want_missing("b", Array({2}));
    CHECK_THROWS_WITH_AS(load_into(back, {&want_missing}), doctest::Contains("'b'"),
                         std::runtime_error);
    Parameter want_shape("a", Array({3}));
    CHECK_THROWS_WITH_AS(load_into(back, {&want_shape}), doctest::Contains("[3]"),
                         std::runtime_error);
    std::remove(p.c_str());
}

TEST_CASE("checkpoint rejects files that are not checkpoints") {
    std::string p = tmp_path("ckpt_bogus");
    {
        std::ofstream f(p);
        f << "not a checkpoint\n";
    }
    CHECK_THROWS(load_checkpoint(p));
    std::remove(p.c_str());
    CHECK_THROWS(load_checkpoint("/nonexistent/nope.ckpt"));
}
