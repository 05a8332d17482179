#include <cmath>
#include <random>

#include "actrec/optim.hpp"
#include "actrec/tape.hpp"
#include "doctest.h"

using namespace actrec;
using namespace actrec::ad;

TEST_CASE("adam leaves parameters unchanged under zero gradient") {
    Parameter p("w", Array({3}, {1.0, -2.0, 0.5}));
    Array before = p.value;
    AdamState adam(0.01);
    adam.step({&p}, {{"w", Array::zeros({3})}});
    CHECK(p.value == before);
}

TEST_CASE("adam first step matches the hand-computed recurrence") {
    // step 1: m = (1-b1) g, v = (1-b2) g^2, mhat = g, vhat = g^2,
    // delta = -lr * g / (|g| + eps)
    Parameter p("w", Array({2}, {0.4, -1.2}));
    Array g({2}, {0.3, -0.07});
    AdamState adam(0.001);
    adam.step({&p}, {{"w", g}});
    for (int i = 0; i < 2; ++i) {
        Real expect = (i == 0 ? 0.4 : -1.2) - 0.001 * g.at(i) / (std::abs(g.at(i)) + 1e-8);
        CHECK(p.value.at(i) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(adam.step_count() == 1);
}

TEST_CASE("adam reaches the minimizer of a 2-D convex quadratic in 200 steps") {
    // f(x) = 0.5 (x-a)' diag(1,3) (x-a), minimizer a
    const Real ax = 1.5, ay = -0.8;
    Parameter p("x", Array({2}, {0.0, 0.0}));
    AdamState adam(0.05);
    for (int it = 0; it < 200; ++it) {
        Array g({2}, {p.value.at(0) - ax, 3.0 * (p.value.at(1) - ay)});
        adam.step({&p}, {{"x", g}});
    }
    CHECK(std::abs(p.value.at(0) - ax) < 1e-3);
    CHECK(std::abs(p.value.at(1) - ay) < 1e-3);
}

TEST_CASE("adam rejects NaN gradients naming the parameter") {
    Parameter p("weird.weight", Array({1}, {1.0}));
    Array g({1}, {std::nan("")});
    AdamState adam;
    CHECK_THROWS_WITH_AS(adam.step({&p}, {{"weird.weight", g}}),
                         doctest::Contains("weird.weight"), std::runtime_error);
}

TEST_CASE("adam skips frozen parameters") {
    Parameter p("w", Array({2}, {1.0, 2.0}));
    p.frozen = true;
    Array before = p.value;
    AdamState adam(0.1);
    adam.step({&p}, {{"w", Array({2}, {5.0, 5.0})}});
    CHECK(p.value == before);
}

TEST_CASE("adam rejects shape-mismatched gradients") {
    Parameter p("w", Array({2}, {1.0, 2.0}));
    AdamState adam;
    CHECK_THROWS(adam.step({&p}, {{"w", Array({3})}}));
}
