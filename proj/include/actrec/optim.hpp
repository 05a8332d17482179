#ifndef ACTREC_OPTIM_HPP
#define ACTREC_OPTIM_HPP

#include <map>
#include <string>

#include "actrec/params.hpp"

namespace actrec {

// Bias-corrected Adam. Moment buffers are keyed by parameter name and created
// lazily as zeros; the step counter is shared across all parameters.
class AdamState {
  public:
    ad::Real lr = 1e-4;
    ad::Real beta1 = 0.9;
    ad::Real beta2 = 0.999;
    ad::Real eps = 1e-8;

    explicit AdamState(ad::Real learning_rate = 1e-4) : lr(learning_rate) {}

    long long step_count() const { return step_; }

    // One update over all non-frozen parameters. `grads` maps parameter name to
    // gradient; a missing entry means zero gradient (parameter unchanged).
    void step(const ParamList& params, const std::map<std::string, ad::Array>& grads);

    // Single-parameter update using this state's current step counter. Used by
    // step(); exposed for the unit-level recurrence checks.
    void apply_one(Parameter& p, const ad::Array& grad, long long step_no);

  private:
    struct Moments {
        ad::Array m, v;
    };
    std::map<std::string, Moments> moments_;
    long long step_ = 0;
};

}  // namespace actrec

#endif
