#ifndef ACTREC_PARAMS_HPP
#define ACTREC_PARAMS_HPP

#include <map>
#include <string>
#include <vector>

#include "actrec/array.hpp"
#include "actrec/tape.hpp"

namespace actrec {

// A named, trainable array. Frozen parameters keep their bytes across training;
// the optimizer skips them and training asserts their values are bit-identical.
struct Parameter {
    std::string name;
    ad::Array value;
    bool frozen = false;

    Parameter() = default;
    Parameter(std::string n, ad::Array v) : name(std::move(n)), value(std::move(v)) {}
};

using ParamList = std::vector<Parameter*>;

inline void set_frozen(const ParamList& ps, bool frozen) {
    for (Parameter* p : ps) p->frozen = frozen;
}

inline long long total_size(const ParamList& ps) {
    long long n = 0;
    for (const Parameter* p : ps) n += p->value.size();
    return n;
}

// Registers parameters on a tape and remembers ids, so gradients can be read
// back by name after backward(). One Binder per tape.
class Binder {
  public:
    explicit Binder(ad::Tape& t) : tape_(&t) {}

    int bind(const Parameter& p) {
        int id = tape_->leaf(p.value, !p.frozen);
        names_.push_back(p.name);
        ids_.push_back(id);
        return id;
    }

    // Gradients of every bound non-frozen parameter; call after tape.backward().
    std::map<std::string, ad::Array> grads() const {
        std::map<std::string, ad::Array> out;
        for (size_t i = 0; i < ids_.size(); ++i) {
            auto [it, fresh] = out.emplace(names_[i], tape_->grad(ids_[i]));
            if (!fresh) {  // same parameter bound twice: accumulate
                const ad::Array& g = tape_->grad(ids_[i]);
                for (int j = 0; j < g.size(); ++j) it->second.at(j) += g.at(j);
            }
        }
        return out;
    }

    ad::Tape& tape() { return *tape_; }

  private:
    ad::Tape* tape_;
    std::vector<std::string> names_;
    std::vector<int> ids_;
};

}  // namespace actrec

#endif
