#ifndef ACTREC_GRADCHECK_HPP
#define ACTREC_GRADCHECK_HPP

#include <functional>
#include <string>
#include <vector>

#include "actrec/params.hpp"

namespace actrec {

// Central finite differences, the independent oracle against which every
// backward rule is checked. `f` must be deterministic (dropout disabled or
// seed-pinned); this is verified by evaluating it twice up front.
ad::Array finite_difference_gradient(const std::function<ad::Real()>& f, ad::Array& x,
                                     ad::Real step = 1e-5);

// max over coordinates of |analytic - fd| / (|fd| + 1e-8)
ad::Real max_rel_error(const ad::Array& analytic, const ad::Array& fd);

struct GradCheckEntry {
    std::string name;
    ad::Real max_rel_err;
};

// Runs the oracle over every parameter in `params` for the scalar function `f`
// (which must read the parameters' current values). `analytic` supplies the
// backward-pass gradient per parameter name.
std::vector<GradCheckEntry> gradcheck_params(
    const std::function<ad::Real()>& f, const ParamList& params,
    const std::function<ad::Array(const std::string&)>& analytic, ad::Real step = 1e-5);

}  // namespace actrec

#endif
