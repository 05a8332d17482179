#include "actrec/gradcheck.hpp"

#include <cmath>

namespace actrec {

ad::Array finite_difference_gradient(const std::function<ad::Real()>& f, ad::Array& x,
                                     ad::Real step) {
    const ad::Real f0 = f();
    const ad::Real f1 = f();
    if (f0 != f1)
        fail("finite_difference_gradient: function is not deterministic (", f0, " vs ", f1, ")");
    ad::Array g = ad::Array::zeros(x.shape);
    for (int i = 0; i < x.size(); ++i) {
        const ad::Real orig = x.at(i);
        x.at(i) = orig + step;
        const ad::Real hi = f();
        x.at(i) = orig - step;
        const ad::Real lo = f();
        x.at(i) = orig;
        g.at(i) = (hi - lo) / (2.0 * step);
    }
    return g;
}

ad::Real max_rel_error(const ad::Array& analytic, const ad::Array& fd) {
    if (!analytic.same_shape(fd))
        fail("max_rel_error: shape ", shape_str(analytic.shape), " vs ", shape_str(fd.shape));
    ad::Real worst = 0;
    for (int i = 0; i < analytic.size(); ++i) {
        const ad::Real err = std::abs(analytic.at(i) - fd.at(i)) / (std::abs(fd.at(i)) + 1e-8);
        worst = std::max(worst, err);
    }
    return worst;
}

std::vector<GradCheckEntry> gradcheck_params(
    const std::function<ad::Real()>& f, const ParamList& params,
    const std::function<ad::Array(const std::string&)>& analytic, ad::Real step) {
    std::vector<GradCheckEntry> out;
    for (Parameter* p : params) {
        ad::Array fd = finite_difference_gradient(f, p->value, step);
        out.push_back({p->name, max_rel_error(analytic(p->name), fd)});
    }
    return out;
}

}  // namespace actrec
