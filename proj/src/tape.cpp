#include "actrec/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>

namespace actrec::ad {

size_t Tape::check(int id) const {
    if (id < 0 || id >= static_cast<int>(values_.size()))
        fail("tape: id ", id, " not on this tape (", values_.size(), " nodes)");
    return static_cast<size_t>(id);
}

int Tape::push(Array value, std::function<void(Tape&, int)> back) {
    values_.push_back(std::move(value));
    nodes_.push_back(Node{std::move(back)});
    grads_.emplace_back();
    requires_grad_.push_back(false);
    return static_cast<int>(values_.size()) - 1;
}

int Tape::leaf(Array a, bool requires_grad) {
    int id = push(std::move(a), nullptr);
    requires_grad_[static_cast<size_t>(id)] = requires_grad;
    return id;
}

const Array& Tape::grad(int id) const {
    size_t i = check(id);
    if (grads_[i].v.empty()) fail("tape: gradient of node ", id, " not computed; run backward first");
    return grads_[i];
}

namespace {
void ensure_grad(Array& g, const Shape& s) {
    if (g.v.empty()) g = Array::zeros(s);
}
}  // namespace

// ---------------------------------------------------------------------------
// conv2d

int Tape::conv2d(int input, int kernel, int bias, Padding pad) {
    const Array& in = val(input);
    const Array& k = val(kernel);
    if (in.rank() != 3) fail("conv2d: input must be HxWxC, got ", shape_str(in.shape));
    if (k.rank() != 4) fail("conv2d: kernel must be khxkwxCxF, got ", shape_str(k.shape));
    const int H = in.dim(0), W = in.dim(1), C = in.dim(2);
    const int kh = k.dim(0), kw = k.dim(1), kc = k.dim(2), F = k.dim(3);
    if (kc != C)
        fail("conv2d: channel mismatch, input ", shape_str(in.shape), " vs kernel ", shape_str(k.shape));
    int oh, ow, ph, pw;
    if (pad == Padding::Same) {
        oh = H;
        ow = W;
        ph = (kh - 1) / 2;
        pw = (kw - 1) / 2;
    } else {
        oh = H - kh + 1;
        ow = W - kw + 1;
        ph = pw = 0;
        if (oh <= 0 || ow <= 0)
            fail("conv2d: VALID kernel ", shape_str(k.shape), " larger than input ", shape_str(in.shape));
    }
    if (bias >= 0) {
        const Array& b = val(bias);
        if (b.rank() != 1 || b.dim(0) != F)
            fail("conv2d: bias ", shape_str(b.shape), " does not match ", F, " output channels");
    }

    Array out({oh, ow, F});
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            Real* o = &out.at(y, x, 0);
            if (bias >= 0) {
                const Array& b = val(bias);
                for (int f = 0; f < F; ++f) o[f] = b.at(f);
            }
            for (int i = 0; i < kh; ++i) {
                const int r = y + i - ph;
                if (r < 0 || r >= H) continue;
                for (int j = 0; j < kw; ++j) {
                    const int cidx = x + j - pw;
                    if (cidx < 0 || cidx >= W) continue;
                    const Real* irow = &in.at(r, cidx, 0);
                    const Real* krow = &k.at(i, j, 0, 0);
                    for (int c = 0; c < C; ++c) {
                        const Real xv = irow[c];
                        const Real* kf = krow + c * F;
                        for (int f = 0; f < F; ++f) o[f] += xv * kf[f];
                    }
                }
            }
        }
    }

    return push(std::move(out), [input, kernel, bias, kh, kw, ph, pw](Tape& t, int self) {
        const Array& go = t.grads_[t.check(self)];
        const Array& in = t.val(input);
        const Array& k = t.val(kernel);
        const int H = in.dim(0), W = in.dim(1), C = in.dim(2), F = k.dim(3);
        const int oh = go.dim(0), ow = go.dim(1);
        ensure_grad(t.g(input), in.shape);
        ensure_grad(t.g(kernel), k.shape);
        Array& gin = t.g(input);
        Array& gk = t.g(kernel);
        if (bias >= 0) {
            ensure_grad(t.g(bias), t.val(bias).shape);
            Array& gb = t.g(bias);
            for (int y = 0; y < oh; ++y)
                for (int x = 0; x < ow; ++x)
                    for (int f = 0; f < F; ++f) gb.at(f) += go.at(y, x, f);
        }
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                const Real* gorow = &go.at(y, x, 0);
                for (int i = 0; i < kh; ++i) {
                    const int r = y + i - ph;
                    if (r < 0 || r >= H) continue;
                    for (int j = 0; j < kw; ++j) {
                        const int cidx = x + j - pw;
                        if (cidx < 0 || cidx >= W) continue;
                        const Real* irow = &in.at(r, cidx, 0);
                        Real* girow = &gin.at(r, cidx, 0);
                        const Real* krow = &k.at(i, j, 0, 0);
                        Real* gkrow = &gk.at(i, j, 0, 0);
                        for (int c = 0; c < C; ++c) {
                            const Real xv = irow[c];
                            const Real* kf = krow + c * F;
                            Real* gkf = gkrow + c * F;
                            Real acc = 0;
                            for (int f = 0; f < F; ++f) {
                                const Real g = gorow[f];
                                acc += g * kf[f];
                                gkf[f] += g * xv;
                            }
                            girow[c] += acc;
                        }
                    }
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------
// maxpool2x2

int Tape::maxpool2x2(int input) {
    const Array& in = val(input);
    if (in.rank() != 3) fail("maxpool2d: input must be HxWxC, got ", shape_str(in.shape));
    if (in.size() == 0) fail("maxpool2d: empty input");
    const int H = in.dim(0), W = in.dim(1), C = in.dim(2);
    const int oh = (H + 1) / 2, ow = (W + 1) / 2;
    Array out({oh, ow, C});
    auto argmax = std::make_shared<std::vector<int>>(static_cast<size_t>(oh * ow * C));
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            for (int c = 0; c < C; ++c) {
                Real best = -std::numeric_limits<Real>::infinity();
                int besti = -1;
                for (int dy = 0; dy < 2; ++dy) {
                    const int r = 2 * y + dy;
                    if (r >= H) continue;  // -inf padding on the high side
                    for (int dx = 0; dx < 2; ++dx) {
                        const int col = 2 * x + dx;
                        if (col >= W) continue;
                        const Real xv = in.at(r, col, c);
                        if (xv > best) {  // strict: ties keep the first row-major position
                            best = xv;
                            besti = (r * W + col) * C + c;
                        }
                    }
                }
                out.at(y, x, c) = best;
                (*argmax)[static_cast<size_t>((y * ow + x) * C + c)] = besti;
            }
        }
    }
    return push(std::move(out), [input, argmax](Tape& t, int self) {
        const Array& go = t.grads_[t.check(self)];
        ensure_grad(t.g(input), t.val(input).shape);
        Array& gin = t.g(input);
        for (int i = 0; i < go.size(); ++i) gin.at((*argmax)[static_cast<size_t>(i)]) += go.at(i);
    });
}

// ---------------------------------------------------------------------------
// affine / matvec

int Tape::affine(int weight, int input, int bias) {
    const Array& w = val(weight);
    const Array& x = val(input);
    const Array& b = val(bias);
    if (w.rank() != 2 || x.rank() != 1 || b.rank() != 1)
        fail("affine: expected weight [m,n], input [n], bias [m]; got ", shape_str(w.shape), ", ",
             shape_str(x.shape), ", ", shape_str(b.shape));
    const int m = w.dim(0), n = w.dim(1);
    if (x.dim(0) != n || b.dim(0) != m)
        fail("affine: dimension mismatch, weight ", shape_str(w.shape), " input ", shape_str(x.shape),
             " bias ", shape_str(b.shape));
    Array out({m});
    for (int i = 0; i < m; ++i) {
        Real acc = b.at(i);
        const Real* wr = &w.at(i, 0);
        for (int j = 0; j < n; ++j) acc += wr[j] * x.at(j);
        out.at(i) = acc;
    }
    return push(std::move(out), [weight, input, bias](Tape& t, int self) {
        const Array& go = t.grads_[t.check(self)];
        const Array& w = t.val(weight);
        const Array& x = t.val(input);
        const int m = w.dim(0), n = w.dim(1);
        ensure_grad(t.g(weight), w.shape);
        ensure_grad(t.g(input), x.shape);
        ensure_grad(t.g(bias), t.val(bias).shape);
        Array& gw = t.g(weight);
        Array& gx = t.g(input);
        Array& gb = t.g(bias);
        for (int i = 0; i < m; ++i) {
            const Real gi = go.at(i);
            gb.at(i) += gi;
            const Real* wr = &w.at(i, 0);
            Real* gwr = &gw.at(i, 0);
            for (int j = 0; j < n; ++j) {
                gwr[j] += gi * x.at(j);
                gx.at(j) += gi * wr[j];
            }
        }
    });
}

int Tape::matvec(int m, int v) {
    const Array& a = val(m);
    const Array& x = val(v);
    if (a.rank() != 2 || x.rank() != 1 || a.dim(1) != x.dim(0))
        fail("matvec: matrix ", shape_str(a.shape), " incompatible with vector ", shape_str(x.shape));
    const int r = a.dim(0), c = a.dim(1);
    Array out({r});
    for (int i = 0; i < r; ++i) {
        Real acc = 0;
        const Real* ar = &a.at(i, 0);
        for (int j = 0; j < c; ++j) acc += ar[j] * x.at(j);
        out.at(i) = acc;
    }
    return push(std::move(out), [m, v](Tape& t, int self) {
        const Array& go = t.grads_[t.check(self)];
        const Array& a = t.val(m);
        const Array& x = t.val(v);
        const int r = a.dim(0), c = a.dim(1);
        ensure_grad(t.g(m), a.shape);
        ensure_grad(t.g(v), x.shape);
        Array& ga = t.g(m);
        Array& gx = t.g(v);
        for (int i = 0; i < r; ++i) {
            const Real gi = go.at(i);
            const Real* ar = &a.at(i, 0);
            Real* gar = &ga.at(i, 0);
            for (int j = 0; j < c; ++j) {
                gar[j] += gi * x.at(j);
                gx.at(j) += gi * ar[j];
            }
        }
    });
}

// ---------------------------------------------------------------------------
// elementwise

int Tape::add(int a, int b) {
    const Array& x = val(a);
    const Array& y = val(b);
    if (!x.same_shape(y)) fail("add: shape ", shape_str(x.shape), " vs ", shape_str(y.shape));
    Array out = x;
    for (int i = 0; i < out.size(); ++i) out.at(i) += y.at(i);
    return push(std::move(out), [a, b](Tape& t, int self) {
        const Array& go = t.grads_[t.check(self)];
        ensure_grad(t.g(a), t.val(a).shape);
        ensure_grad(t.g(b), t.val(b).shape);
        for (int i = 0; i < go.size(); ++i) {
            t.g(a).at(i) += go.at(i);
            t.g(b).at(i) += go.at(i);
        }
    });
}

int Tape::mul(int a, int b) {
    const Array& x = val(a);
    const Array& y = val(b);
    if (!x.same_shape(y)) fail("mul: shape ", shape_str(x.shape), " vs ", shape_str(y.shape));
    Array out = x;
    for (int i = 0; i < out.size(); ++i) out.at(i) *= y.at(i);
    return push(std::move(out), [a, b](Tape& t, int self) {
        const Array& go = t.grads_[t.check(self)];
        const Array& x = t.val(a);
        const Array& y = t.val(b);
        ensure_grad(t.g(a), x.shape);
        ensure_grad(t.g(b), y.shape);
        for (int i = 0; i < go.size(); ++i) {
            t.g(a).at(i) += go.at(i) * y.at(i);
            t.g(b).at(i) += go.at(i) * x.at(i);
        }
    });
}

int Tape::scale(int a, Real k) {
    Array out = val(a);
    for (Real& x : out.v) x *= k;
    return push(std::move(out), [a, k](Tape& t, int self) {
        const Array& go = t.grads_[t.check(self)];
        ensure_grad(t.g(a), t.val(a).shape);
        for (int i = 0; i < go.size(); ++i) t.g(a).at(i) += k * go.at(i);
    });
}

int Tape::relu(int a) {
    Array out = val(a);
    for (Real& x : out.v) x = x > 0 ? x : 0;
    return push(std::move(out), [a](Tape& t, int self) {
        const Array& go = t.grads_[t.check(self)];
        const Array& x = t.val(a);
        ensure_grad(t.g(a), x.shape);
        for (int i = 0; i < go.size(); ++i)
            if (x.at(i) > 0) t.g(a).at(i) += go.at(i);
    });
}

int Tape::sigmoid(int a) {
    Array out = val(a);
    for (Real& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
    return push(std::move(out), [a](Tape& t, int self) {
        const Array& go = t.grads_[t.check(self)];
        const Array& y = t.values_[t.check(self)];
        ensure_grad(t.g(a), t.val(a).shape);
        for (int i = 0; i < go.size(); ++i) t.g(a).at(i) += go.at(i) * y.at(i) * (1.0 - y.at(i));
    });
}

int Tape::tanh_(int a) {
    Array out = val(a);
    for (Real& x : out.v) x = std::tanh(x);
    return push(std::move(out), [a](Tape& t, int self) {
        const Array& go = t.grads_[t.check(self)];
        const Array& y = t.values_[t.check(self)];
        ensure_grad(t.g(a), t.val(a).shape);
        for (int i = 0; i < go.size(); ++i) t.g(a).at(i) += go.at(i) * (1.0 - y.at(i) * y.at(i));
    });
}

// ---------------------------------------------------------------------------
// softmax / cross-entropy

namespace {
// Iterates all slices along `axis`: base offset + i*stride for i in [0, extent).
template <typename Fn>
void for_each_slice(const Shape& shape, int axis, Fn&& fn) {
    int extent = shape[static_cast<size_t>(axis)];
    int stride = 1;
    for (size_t i = static_cast<size_t>(axis) + 1; i < shape.size(); ++i) stride *= shape[i];
    int outer = 1;
    for (size_t i = 0; i < static_cast<size_t>(axis); ++i) outer *= shape[i];
    for (int o = 0; o < outer; ++o)
        for (int s = 0; s < stride; ++s) fn(o * extent * stride + s, stride, extent);
}
}  // namespace

int Tape::softmax(int a, int axis) {
    const Array& x = val(a);
    if (axis < 0 || axis >= x.rank()) fail("softmax: axis ", axis, " out of range for ", shape_str(x.shape));
    Array out = x;
    for_each_slice(x.shape, axis, [&](int base, int stride, int extent) {
        Real mx = -std::numeric_limits<Real>::infinity();
        for (int i = 0; i < extent; ++i) mx = std::max(mx, x.at(base + i * stride));
        Real z = 0;
        for (int i = 0; i < extent; ++i) {
            Real e = std::exp(x.at(base + i * stride) - mx);
            out.at(base + i * stride) = e;
            z += e;
        }
        for (int i = 0; i < extent; ++i) out.at(base + i * stride) /= z;
    });
    return push(std::move(out), [a, axis](Tape& t, int self) {
        const Array& go = t.grads_[t.check(self)];
        const Array& y = t.values_[t.check(self)];
        ensure_grad(t.g(a), t.val(a).shape);
        Array& gx = t.g(a);
        for_each_slice(y.shape, axis, [&](int base, int stride, int extent) {
            Real dot = 0;
            for (int i = 0; i < extent; ++i) dot += go.at(base + i * stride) * y.at(base + i * stride);
            for (int i = 0; i < extent; ++i)
                gx.at(base + i * stride) += y.at(base + i * stride) * (go.at(base + i * stride) - dot);
        });
    });
}

int Tape::cross_entropy(int logits, int label) {
    const Array& x = val(logits);
    if (x.rank() != 1) fail("cross_entropy: logits must be a vector, got ", shape_str(x.shape));
    if (label < 0 || label >= x.dim(0)) fail("cross_entropy: label ", label, " out of range ", x.dim(0));
    Real mx = -std::numeric_limits<Real>::infinity();
    for (Real v : x.v) mx = std::max(mx, v);
    Real z = 0;
    for (Real v : x.v) z += std::exp(v - mx);
    Real loss = mx + std::log(z) - x.at(label);
    return push(Array({1}, {loss}), [logits, label](Tape& t, int self) {
        const Real g0 = t.grads_[t.check(self)].at(0);
        const Array& x = t.val(logits);
        ensure_grad(t.g(logits), x.shape);
        Real mx = -std::numeric_limits<Real>::infinity();
        for (Real v : x.v) mx = std::max(mx, v);
        Real z = 0;
        for (Real v : x.v) z += std::exp(v - mx);
        for (int i = 0; i < x.size(); ++i) {
            Real p = std::exp(x.at(i) - mx) / z;
            t.g(logits).at(i) += g0 * (p - (i == label ? 1.0 : 0.0));
        }
    });
}

// ---------------------------------------------------------------------------
// shape ops

int Tape::concat(int a, int b) {
    const Array& x = val(a);
    const Array& y = val(b);
    if (x.rank() != 1 || y.rank() != 1)
        fail("concat: expects vectors, got ", shape_str(x.shape), " and ", shape_str(y.shape));
    Array out({x.dim(0) + y.dim(0)});
    std::copy(x.v.begin(), x.v.end(), out.v.begin());
    std::copy(y.v.begin(), y.v.end(), out.v.begin() + x.dim(0));
    return push(std::move(out), [a, b](Tape& t, int self) {
        const Array& go = t.grads_[t.check(self)];
        const int na = t.val(a).dim(0);
        ensure_grad(t.g(a), t.val(a).shape);
        ensure_grad(t.g(b), t.val(b).shape);
        for (int i = 0; i < na; ++i) t.g(a).at(i) += go.at(i);
        for (int i = na; i < go.size(); ++i) t.g(b).at(i - na) += go.at(i);
    });
}

int Tape::stack_cols(const std::vector<int>& cols) {
    if (cols.empty()) fail("stack_cols: no columns");
    const int r = val(cols[0]).dim(0);
    for (int id : cols) {
        const Array& c = val(id);
        if (c.rank() != 1 || c.dim(0) != r)
            fail("stack_cols: column ", shape_str(c.shape), " does not match length ", r);
    }
    const int n = static_cast<int>(cols.size());
    Array out({r, n});
    for (int j = 0; j < n; ++j) {
        const Array& c = val(cols[static_cast<size_t>(j)]);
        for (int i = 0; i < r; ++i) out.at(i, j) = c.at(i);
    }
    return push(std::move(out), [cols](Tape& t, int self) {
        const Array& go = t.grads_[t.check(self)];
        const int r = go.dim(0), n = go.dim(1);
        for (int j = 0; j < n; ++j) {
            int id = cols[static_cast<size_t>(j)];
            ensure_grad(t.g(id), t.val(id).shape);
            for (int i = 0; i < r; ++i) t.g(id).at(i) += go.at(i, j);
        }
    });
}

int Tape::dropout(int a, Real rate, bool train, uint64_t seed) {
    if (rate < 0.0 || rate >= 1.0) fail("dropout: rate ", rate, " outside [0,1)");
    if (!train || rate == 0.0) {
        // identity at eval time
        Array out = val(a);
        return push(std::move(out), [a](Tape& t, int self) {
            const Array& go = t.grads_[t.check(self)];
            ensure_grad(t.g(a), t.val(a).shape);
            for (int i = 0; i < go.size(); ++i) t.g(a).at(i) += go.at(i);
        });
    }
    const Array& x = val(a);
    auto mask = std::make_shared<std::vector<Real>>(static_cast<size_t>(x.size()));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<Real> u(0.0, 1.0);
    const Real keep_scale = 1.0 / (1.0 - rate);
    for (Real& m : *mask) m = (u(rng) < rate) ? 0.0 : keep_scale;
    Array out = x;
    for (int i = 0; i < out.size(); ++i) out.at(i) *= (*mask)[static_cast<size_t>(i)];
    return push(std::move(out), [a, mask](Tape& t, int self) {
        const Array& go = t.grads_[t.check(self)];
        ensure_grad(t.g(a), t.val(a).shape);
        for (int i = 0; i < go.size(); ++i) t.g(a).at(i) += go.at(i) * (*mask)[static_cast<size_t>(i)];
    });
}

int Tape::sum(int a) {
    const Array& x = val(a);
    Real s = 0;
    for (Real v : x.v) s += v;
    return push(Array({1}, {s}), [a](Tape& t, int self) {
        const Real g0 = t.grads_[t.check(self)].at(0);
        ensure_grad(t.g(a), t.val(a).shape);
        for (int i = 0; i < t.g(a).size(); ++i) t.g(a).at(i) += g0;
    });
}

int Tape::mean(int a) {
    int s = sum(a);
    return scale(s, 1.0 / val(a).size());
}

int Tape::reshape(int a, Shape s) {
    const Array& x = val(a);
    if (shape_size(s) != x.size())
        fail("reshape: ", shape_str(x.shape), " cannot become ", shape_str(s));
    Array out(std::move(s), x.v);
    return push(std::move(out), [a](Tape& t, int self) {
        const Array& go = t.grads_[t.check(self)];
        ensure_grad(t.g(a), t.val(a).shape);
        for (int i = 0; i < go.size(); ++i) t.g(a).at(i) += go.at(i);
    });
}

std::pair<int, int> Tape::lstm_step(int x, int h, int c, const LstmBinding& p) {
    int i = sigmoid(add(affine(p.w_xi, x, p.b_i), matvec(p.w_hi, h)));
    int f = sigmoid(add(affine(p.w_xf, x, p.b_f), matvec(p.w_hf, h)));
    int gg = tanh_(add(affine(p.w_xg, x, p.b_g), matvec(p.w_hg, h)));
    int o = sigmoid(add(affine(p.w_xo, x, p.b_o), matvec(p.w_ho, h)));
    int c2 = add(mul(f, c), mul(i, gg));
    int h2 = mul(o, tanh_(c2));
    return {h2, c2};
}

void Tape::backward(int loss) {
    size_t li = check(loss);
    if (values_[li].size() != 1)
        fail("backward: loss must be scalar, got ", shape_str(values_[li].shape));
    if (ran_backward_) fail("backward: tape already swept");
    ran_backward_ = true;
    grads_[li] = Array(values_[li].shape, {1.0});
    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
        auto& node = nodes_[static_cast<size_t>(id)];
        if (!node.back) continue;
        if (grads_[static_cast<size_t>(id)].v.empty()) continue;  // unreachable from loss
        node.back(*this, id);
    }
    // leaves never touched by the sweep get explicit zeros
    for (size_t i = 0; i < grads_.size(); ++i)
        if (grads_[i].v.empty()) grads_[i] = Array::zeros(values_[i].shape);
}

}  // namespace actrec::ad
