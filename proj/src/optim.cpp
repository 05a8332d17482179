#include "actrec/optim.hpp"

#include <cmath>

namespace actrec {

void AdamState::apply_one(Parameter& p, const ad::Array& grad, long long step_no) {
    if (!grad.same_shape(p.value))
        fail("adam: gradient shape ", shape_str(grad.shape), " does not match parameter '", p.name,
             "' ", shape_str(p.value.shape));
    for (ad::Real g : grad.v)
        if (std::isnan(g)) fail("adam: NaN gradient for parameter '", p.name, "'");
    auto& mom = moments_[p.name];
    if (mom.m.v.empty()) {
        mom.m = ad::Array::zeros(p.value.shape);
        mom.v = ad::Array::zeros(p.value.shape);
    }
    const ad::Real bc1 = 1.0 - std::pow(beta1, static_cast<ad::Real>(step_no));
    const ad::Real bc2 = 1.0 - std::pow(beta2, static_cast<ad::Real>(step_no));
    for (int i = 0; i < p.value.size(); ++i) {
        const ad::Real g = grad.at(i);
        mom.m.at(i) = beta1 * mom.m.at(i) + (1.0 - beta1) * g;
        mom.v.at(i) = beta2 * mom.v.at(i) + (1.0 - beta2) * g * g;
        const ad::Real mhat = mom.m.at(i) / bc1;
        const ad::Real vhat = mom.v.at(i) / bc2;
        p.value.at(i) -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

void AdamState::step(const ParamList& params, const std::map<std::string, ad::Array>& grads) {
    ++step_;
    for (Parameter* p : params) {
        if (p->frozen) continue;
        auto it = grads.find(p->name);
        if (it == grads.end()) continue;
        apply_one(*p, it->second, step_);
    }
}

}  // namespace actrec
