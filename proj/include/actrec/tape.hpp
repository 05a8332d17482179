#ifndef ACTREC_TAPE_HPP
#define ACTREC_TAPE_HPP

#include <functional>
#include <utility>
#include <vector>

#include "actrec/array.hpp"

namespace actrec::ad {

enum class Padding { Same, Valid };

// Tape ids of the twelve LSTM parameter arrays (input/forget/cell/output gates).
struct LstmBinding {
    int w_xi, w_hi, b_i;
    int w_xf, w_hf, b_f;
    int w_xg, w_hg, b_g;
    int w_xo, w_ho, b_o;
};

// Records every executed operation together with its backward rule. Replaying the
// record in reverse order accumulates gradients additively into shared inputs.
// Single-threaded by contract; use one Tape per concurrently processed sequence.
class Tape {
  public:
    // Registers a leaf value. requires_grad marks it as a gradient sink for callers;
    // gradients are accumulated for every node regardless.
    int leaf(Array a, bool requires_grad = false);

    // out[oh,ow,f] = sum_{i,j,c} in[oh+i-ph, oj+j-pw, c] * k[i,j,c,f] (+ bias[f]),
    // stride 1. Same preserves HxW, Valid yields (H-kh+1)x(W-kw+1). bias = -1 for none.
    int conv2d(int input, int kernel, int bias, Padding pad);

    // 2x2 window, stride 2; odd extents are padded with -inf on the high side.
    // Backward routes gradient to the first (row-major) maximum of each window.
    int maxpool2x2(int input);

    // weight [m,n] * input [n] + bias [m]
    int affine(int weight, int input, int bias);
    // m [r,c] * v [c]
    int matvec(int m, int v);

    int add(int a, int b);
    int mul(int a, int b);
    int scale(int a, Real k);
    int relu(int a);
    int sigmoid(int a);
    int tanh_(int a);

    // Max-subtracted softmax along `axis`.
    int softmax(int a, int axis);

    // Scalar -log softmax(logits)[label], computed through log-sum-exp.
    int cross_entropy(int logits, int label);

    // 1-D concatenation.
    int concat(int a, int b);

    // n vectors of length r -> matrix [r, n], vector i becoming column i.
    int stack_cols(const std::vector<int>& cols);

    // Inverted dropout: at train time zeroes units with probability `rate` and scales
    // survivors by 1/(1-rate); identity at eval time. Mask is a pure function of `seed`.
    int dropout(int a, Real rate, bool train, uint64_t seed);

    int sum(int a);
    int mean(int a);
    int reshape(int a, Shape s);

    // Fully gated LSTM update; returns {h', c'}. Composite of primitive ops, so the
    // backward pass falls out of the tape.
    std::pair<int, int> lstm_step(int x, int h, int c, const LstmBinding& p);

    // Reverse sweep from a scalar loss. Every node reachable from the loss receives
    // its gradient; unreachable nodes keep zeros.
    void backward(int loss);

    const Array& val(int id) const { return values_[check(id)]; }
    const Array& grad(int id) const;
    int node_count() const { return static_cast<int>(values_.size()); }

  private:
    struct Node {
        // backward(self): reads grads_[self], accumulates into parent grads.
        std::function<void(Tape&, int)> back;
    };

    size_t check(int id) const;
    int push(Array value, std::function<void(Tape&, int)> back);
    Array& g(int id) { return grads_[check(id)]; }

    std::vector<Array> values_;
    std::vector<Node> nodes_;
    std::vector<Array> grads_;
    std::vector<bool> requires_grad_;
    bool ran_backward_ = false;
};

}  // namespace actrec::ad

#endif
