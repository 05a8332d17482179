#ifndef ACTREC_TEST_HELPERS_HPP
#define ACTREC_TEST_HELPERS_HPP

#include <functional>
#include <random>
#include <vector>

#include "actrec/gradcheck.hpp"
#include "actrec/tape.hpp"

namespace actrec::testing {

// Checks one tape-built graph against the finite-difference oracle.
//
// `build` runs the graph on a fresh tape: it registers each input array from
// `inputs` (in order) and returns the scalar loss id plus the input leaf ids.
// The check perturbs each coordinate of each input and compares backward()
// gradients against central differences.
struct GraphSpec {
    int loss;
    std::vector<int> input_ids;
};

inline ad::Real gradcheck_graph(std::vector<ad::Array>& inputs,
                                const std::function<GraphSpec(ad::Tape&, const std::vector<ad::Array>&)>& build,
                                ad::Real step = 1e-5) {
    auto eval = [&]() {
        ad::Tape t;
        GraphSpec g = build(t, inputs);
        return t.val(g.loss).at(0);
    };
    ad::Tape t;
    GraphSpec g = build(t, inputs);
    t.backward(g.loss);
    ad::Real worst = 0;
    for (size_t i = 0; i < inputs.size(); ++i) {
        ad::Array fd = finite_difference_gradient(eval, inputs[i], step);
        worst = std::max(worst, max_rel_error(t.grad(g.input_ids[i]), fd));
    }
    return worst;
}

// Reduces any output to a scalar through a fixed random projection so the
// whole output influences the loss.
inline int project_to_scalar(ad::Tape& t, int out, uint64_t seed = 7) {
    std::mt19937_64 rng(seed);
    ad::Array w = ad::Array::uniform(t.val(out).shape, rng, -1.0, 1.0);
    int wid = t.leaf(std::move(w));
    return t.sum(t.mul(out, wid));
}

}  // namespace actrec::testing

#endif
