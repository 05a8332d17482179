#include <cmath>
#include <random>

#include "actrec/tape.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace actrec;
using namespace actrec::ad;
using actrec::testing::gradcheck_graph;
using actrec::testing::project_to_scalar;

namespace {

// Independent reference convolution (triple-checked against hand examples);
// deliberately structured differently from the tape implementation.
Array conv_ref(const Array& in, const Array& k, const Array* bias, Padding pad) {
    const int H = in.dim(0), W = in.dim(1), C = in.dim(2);
    const int kh = k.dim(0), kw = k.dim(1), F = k.dim(3);
    const int ph = pad == Padding::Same ? (kh - 1) / 2 : 0;
    const int pw = pad == Padding::Same ? (kw - 1) / 2 : 0;
    const int oh = pad == Padding::Same ? H : H - kh + 1;
    const int ow = pad == Padding::Same ? W : W - kw + 1;
    Array out({oh, ow, F});
    for (int f = 0; f < F; ++f)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                Real acc = bias ? bias->at(f) : 0.0;
                for (int i = 0; i < kh; ++i)
                    for (int j = 0; j < kw; ++j)
                        for (int c = 0; c < C; ++c) {
                            int r = y + i - ph, col = x + j - pw;
                            if (r < 0 || r >= H || col < 0 || col >= W) continue;
                            acc += in.at(r, col, c) * k.at(i, j, c, f);
                        }
                out.at(y, x, f) = acc;
            }
    return out;
}

std::mt19937_64 rng_fixed(uint64_t s) { return std::mt19937_64(s); }

}  // namespace

TEST_CASE("conv2d shapes follow the padding mode") {
    std::mt19937_64 rng = rng_fixed(1);
    Tape t;
    int x = t.leaf(Array::randn({20, 300, 3}, rng));
    int k = t.leaf(Array::randn({8, 3, 3, 2}, rng, 0.1));
    int y = t.conv2d(x, k, -1, Padding::Same);
    CHECK(t.val(y).shape == Shape{20, 300, 2});

    int x2 = t.leaf(Array::randn({5, 75, 3}, rng));
    int k2 = t.leaf(Array::randn({5, 75, 3, 4}, rng, 0.1));
    int y2 = t.conv2d(x2, k2, -1, Padding::Valid);
    CHECK(t.val(y2).shape == Shape{1, 1, 4});
}

TEST_CASE("conv2d 1x1 identity kernel preserves the input") {
    Tape t;
    int x = t.leaf(Array({1, 1, 1}, {3.5}));
    int k = t.leaf(Array({1, 1, 1, 1}, {1.0}));
    int y = t.conv2d(x, k, -1, Padding::Same);
    CHECK(t.val(y).at(0) == doctest::Approx(3.5));
}

TEST_CASE("conv2d matches the reference implementation") {
    std::mt19937_64 rng = rng_fixed(2);
    Array in = Array::randn({6, 7, 3}, rng);
    Array k = Array::randn({3, 3, 3, 4}, rng);
    Array b = Array::randn({4}, rng);
    for (Padding pad : {Padding::Same, Padding::Valid}) {
        Tape t;
        int y = t.conv2d(t.leaf(in), t.leaf(k), t.leaf(b), pad);
        Array ref = conv_ref(in, k, &b, pad);
        CHECK(max_abs_diff(t.val(y), ref) < 1e-12);
    }
}

TEST_CASE("conv2d rejects channel mismatch naming both shapes") {
    Tape t;
    int x = t.leaf(Array({2, 2, 3}));
    int k = t.leaf(Array({2, 2, 4, 1}));
    CHECK_THROWS_WITH_AS(t.conv2d(x, k, -1, Padding::Same),
                         doctest::Contains("[2x2x3]"), std::runtime_error);
}

TEST_CASE("maxpool halves spatial extents and keeps channels") {
    std::mt19937_64 rng = rng_fixed(3);
    Tape t;
    int x = t.leaf(Array::randn({20, 300, 5}, rng));
    int y = t.maxpool2x2(x);
    CHECK(t.val(y).shape == Shape{10, 150, 5});
    int z = t.maxpool2x2(t.leaf(Array::randn({10, 150, 5}, rng)));
    CHECK(t.val(z).shape == Shape{5, 75, 5});
}

TEST_CASE("maxpool of a constant input is that constant") {
    Tape t;
    int x = t.leaf(Array::full({4, 6, 2}, 2.25));
    int y = t.maxpool2x2(x);
    for (Real v : t.val(y).v) CHECK(v == doctest::Approx(2.25));
}

TEST_CASE("maxpool pads odd extents with -inf on the high side") {
    Tape t;
    // 3x3 input: output 2x2; bottom/right cells see only real values
    Array a({3, 3, 1}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    int y = t.maxpool2x2(t.leaf(a));
    CHECK(t.val(y).shape == Shape{2, 2, 1});
    CHECK(t.val(y).at(0, 0, 0) == 5);
    CHECK(t.val(y).at(0, 1, 0) == 6);
    CHECK(t.val(y).at(1, 0, 0) == 8);
    CHECK(t.val(y).at(1, 1, 0) == 9);
}

TEST_CASE("maxpool backward routes all gradient to first argmax only") {
    Tape t;
    // tie inside the window: first row-major position wins
    Array a({2, 2, 1}, {7, 7, 7, 7});
    int x = t.leaf(a, true);
    int y = t.maxpool2x2(x);
    int loss = t.sum(y);
    t.backward(loss);
    const Array& g = t.grad(x);
    CHECK(g.at(0) == 1.0);
    CHECK(g.at(1) == 0.0);
    CHECK(g.at(2) == 0.0);
    CHECK(g.at(3) == 0.0);

    // routed gradient mass equals incoming mass on a random map
    std::mt19937_64 rng = rng_fixed(4);
    Tape t2;
    int x2 = t2.leaf(Array::randn({6, 8, 3}, rng), true);
    int y2 = t2.maxpool2x2(x2);
    t2.backward(t2.sum(y2));
    Real total = 0;
    for (Real v : t2.grad(x2).v) total += v;
    CHECK(total == doctest::Approx(t2.val(y2).size()));
}

TEST_CASE("arrays reject non-positive extents") {
    CHECK_THROWS(Array({0, 2, 2}));
    CHECK_THROWS(Array({-1}));
}

TEST_CASE("affine identity and zero-weight cases") {
    Tape t;
    Array w({3, 3});
    for (int i = 0; i < 3; ++i) w.at(i, i) = 1.0;
    Array x({3}, {1.5, -2.0, 0.25});
    int y = t.affine(t.leaf(w), t.leaf(x), t.leaf(Array({3})));
    CHECK(max_abs_diff(t.val(y), x) == 0.0);

    Array b({2}, {4.0, -1.0});
    int y2 = t.affine(t.leaf(Array({2, 3})), t.leaf(x), t.leaf(b));
    CHECK(max_abs_diff(t.val(y2), b) == 0.0);
}

TEST_CASE("affine matches hand multiplication for a 2x3 weight") {
    Tape t;
    Array w({2, 3}, {1, 2, 3, 4, 5, 6});
    Array x({3}, {7, 8, 9});
    Array b({2}, {0.5, -0.5});
    int y = t.affine(t.leaf(w), t.leaf(x), t.leaf(b));
    // rows: 1*7+2*8+3*9 = 50, 4*7+5*8+6*9 = 122
    CHECK(t.val(y).at(0) == doctest::Approx(50.5));
    CHECK(t.val(y).at(1) == doctest::Approx(121.5));
    CHECK_THROWS(t.affine(t.leaf(w), t.leaf(Array({4})), t.leaf(b)));
}

TEST_CASE("softmax basics") {
    Tape t;
    int y = t.softmax(t.leaf(Array({2}, {0, 0})), 0);
    CHECK(t.val(y).at(0) == doctest::Approx(0.5));

    int big = t.softmax(t.leaf(Array({3}, {1000, 1000, 1000})), 0);
    for (Real v : t.val(big).v) CHECK(v == doctest::Approx(1.0 / 3));
    CHECK(t.val(big).all_finite());

    int thirds = t.softmax(t.leaf(Array({3}, {std::log(1.0), std::log(2.0), std::log(3.0)})), 0);
    CHECK(t.val(thirds).at(0) == doctest::Approx(1.0 / 6).epsilon(1e-9));
    CHECK(t.val(thirds).at(1) == doctest::Approx(2.0 / 6).epsilon(1e-9));
    CHECK(t.val(thirds).at(2) == doctest::Approx(3.0 / 6).epsilon(1e-9));
}

TEST_CASE("softmax sums to one and is shift invariant") {
    std::mt19937_64 rng = rng_fixed(5);
    for (int trial = 0; trial < 50; ++trial) {
        Array x = Array::randn({7}, rng, 3.0);
        Array shifted = x;
        std::uniform_real_distribution<Real> u(-5, 5);
        Real c = u(rng);
        for (Real& v : shifted.v) v += c;
        Tape t;
        int a = t.softmax(t.leaf(x), 0);
        int b = t.softmax(t.leaf(shifted), 0);
        Real s = 0;
        for (Real v : t.val(a).v) s += v;
        CHECK(std::abs(s - 1.0) < 1e-6);
        CHECK(max_abs_diff(t.val(a), t.val(b)) < 1e-9);
    }
}

TEST_CASE("softmax along a chosen axis of a matrix") {
    Tape t;
    Array m({2, 2}, {0, 0, std::log(2.0), std::log(6.0)});
    int rows = t.softmax(t.leaf(m), 1);
    CHECK(t.val(rows).at(1, 0) == doctest::Approx(0.25));
    CHECK(t.val(rows).at(1, 1) == doctest::Approx(0.75));
    int cols = t.softmax(t.leaf(m), 0);
    Real s = t.val(cols).at(0, 0) + t.val(cols).at(1, 0);
    CHECK(s == doctest::Approx(1.0));
    CHECK_THROWS(t.softmax(t.leaf(m), 2));
}

TEST_CASE("relu, sigmoid and cross-entropy basics") {
    Tape t;
    int r = t.relu(t.leaf(Array({2}, {-1, 2})));
    CHECK(t.val(r).at(0) == 0.0);
    CHECK(t.val(r).at(1) == 2.0);

    const int C = 5;
    int ce = t.cross_entropy(t.leaf(Array({C}, 0.7)), 3);  // uniform logits
    CHECK(t.val(ce).at(0) == doctest::Approx(std::log(static_cast<Real>(C))));
    CHECK_THROWS(t.cross_entropy(t.leaf(Array({C})), 5));
}

TEST_CASE("dropout is identity at eval time and scales at train time") {
    std::mt19937_64 rng = rng_fixed(6);
    Array x = Array::randn({64}, rng);
    Tape t;
    int id = t.dropout(t.leaf(x), 0.5, /*train=*/false, 123);
    CHECK(max_abs_diff(t.val(id), x) == 0.0);

    int tr = t.dropout(t.leaf(x), 0.5, /*train=*/true, 123);
    int kept = 0;
    for (int i = 0; i < 64; ++i) {
        Real v = t.val(tr).at(i);
        if (v != 0.0) {
            CHECK(v == doctest::Approx(2.0 * x.at(i)));
            ++kept;
        }
    }
    CHECK(kept > 10);  // with seed 123 about half survive
    CHECK(kept < 54);

    CHECK_THROWS(t.dropout(t.leaf(x), 1.0, true, 1));
    CHECK_THROWS(t.dropout(t.leaf(x), -0.1, true, 1));
}

TEST_CASE("backward of sum gives all-ones; of x*x gives 2x") {
    std::mt19937_64 rng = rng_fixed(7);
    Array xv = Array::randn({5}, rng);
    Tape t;
    int x = t.leaf(xv, true);
    t.backward(t.sum(x));
    for (Real v : t.grad(x).v) CHECK(v == 1.0);

    Tape t2;
    int x2 = t2.leaf(xv, true);
    t2.backward(t2.sum(t2.mul(x2, x2)));
    for (int i = 0; i < 5; ++i) CHECK(t2.grad(x2).at(i) == doctest::Approx(2 * xv.at(i)));
}

TEST_CASE("backward rejects non-scalar loss and unknown ids; unreachable leaves get zeros") {
    Tape t;
    int x = t.leaf(Array({3}, {1, 2, 3}), true);
    int unused = t.leaf(Array({2}, {5, 5}), true);
    CHECK_THROWS(t.backward(x));       // not scalar
    CHECK_THROWS(t.val(99));           // not on tape
    int loss = t.sum(x);
    CHECK_THROWS(t.backward(1234));    // loss id not on tape
    t.backward(loss);
    for (Real v : t.grad(unused).v) CHECK(v == 0.0);
}

TEST_CASE("lstm_step with zero parameters matches the hand-derived update") {
    // all gates sigmoid(0)=0.5, candidate tanh(0)=0 -> c' = 0.5*c, h' = 0.5*tanh(0.5*c)
    const int n = 3, m = 2;
    Tape t;
    auto zl = [&](Shape s) { return t.leaf(Array(std::move(s))); };
    LstmBinding p{zl({m, n}), zl({m, m}), zl({m}), zl({m, n}), zl({m, m}), zl({m}),
                  zl({m, n}), zl({m, m}), zl({m}), zl({m, n}), zl({m, m}), zl({m})};
    int x = t.leaf(Array({n}, {1.0, -2.0, 0.5}));
    int h = t.leaf(Array({m}, {0.3, -0.1}));
    int c = t.leaf(Array({m}, {0.8, -0.4}));
    auto [h2, c2] = t.lstm_step(x, h, c, p);
    for (int i = 0; i < m; ++i) {
        Real cexp = 0.5 * t.val(c).at(i);
        CHECK(t.val(c2).at(i) == doctest::Approx(cexp).epsilon(1e-12));
        CHECK(t.val(h2).at(i) == doctest::Approx(0.5 * std::tanh(cexp)).epsilon(1e-12));
    }
}

TEST_CASE("lstm cell state passes through when input gate is shut and forget gate open") {
    const int n = 2, m = 2;
    Tape t;
    auto zl = [&](Shape s) { return t.leaf(Array(std::move(s))); };
    int b_i = t.leaf(Array({m}, -60.0));  // input gate ~ 0
    int b_f = t.leaf(Array({m}, 60.0));   // forget gate ~ 1
    LstmBinding p{zl({m, n}), zl({m, m}), b_i,      zl({m, n}), zl({m, m}), b_f,
                  zl({m, n}), zl({m, m}), zl({m}),  zl({m, n}), zl({m, m}), zl({m})};
    int x = t.leaf(Array({n}, {3.0, -1.0}));
    int h = t.leaf(Array({m}, {0.2, 0.9}));
    int c = t.leaf(Array({m}, {1.25, -0.75}));
    auto [h2, c2] = t.lstm_step(x, h, c, p);
    (void)h2;
    CHECK(max_abs_diff(t.val(c2), t.val(c)) < 1e-9);
}

TEST_CASE("finite differences: x^2 at 3, analytic softmax+CE, determinism guard") {
    Array x({1}, {3.0});
    auto f = [&]() { return x.at(0) * x.at(0); };
    Array g = finite_difference_gradient(f, x, 1e-5);
    CHECK(g.at(0) == doctest::Approx(6.0).epsilon(1e-8));

    std::mt19937_64 rng = rng_fixed(8);
    Array logits = Array::randn({6}, rng);
    const int label = 2;
    auto ce = [&]() {
        Tape t;
        return t.val(t.cross_entropy(t.leaf(logits), label)).at(0);
    };
    Array fd = finite_difference_gradient(ce, logits, 1e-6);
    Tape t;
    int sm = t.softmax(t.leaf(logits), 0);
    for (int i = 0; i < 6; ++i) {
        Real expect = t.val(sm).at(i) - (i == label ? 1.0 : 0.0);
        CHECK(fd.at(i) == doctest::Approx(expect).epsilon(1e-5));
    }

    int counter = 0;
    Array dummy({1}, {0.0});
    auto nondet = [&]() { return static_cast<Real>(counter++); };
    CHECK_THROWS_WITH_AS(finite_difference_gradient(nondet, dummy), doctest::Contains("deterministic"),
                         std::runtime_error);
}

TEST_CASE("gradient check property holds for every operation") {
    std::mt19937_64 rng = rng_fixed(9);
    const Real tol = 1e-4;
    auto offset = [&](Shape s) {
        // keep values away from relu/max kinks
        Array a = Array::randn(std::move(s), rng);
        for (Real& v : a.v)
            if (std::abs(v) < 0.05) v += 0.2;
        return a;
    };

    SUBCASE("conv2d same and valid") {
        for (Padding pad : {Padding::Same, Padding::Valid}) {
            std::vector<Array> in = {offset({5, 6, 2}), offset({3, 3, 2, 3}), offset({3})};
            Real err = gradcheck_graph(in, [&](Tape& t, const std::vector<Array>& v) {
                int x = t.leaf(v[0], true), k = t.leaf(v[1], true), b = t.leaf(v[2], true);
                int y = t.conv2d(x, k, b, pad);
                return actrec::testing::GraphSpec{project_to_scalar(t, y), {x, k, b}};
            });
            CHECK(err < tol);
        }
    }
    SUBCASE("maxpool even and odd extents") {
        for (Shape s : {Shape{4, 6, 2}, Shape{5, 7, 2}}) {
            std::vector<Array> in = {offset(s)};
            Real err = gradcheck_graph(in, [&](Tape& t, const std::vector<Array>& v) {
                int x = t.leaf(v[0], true);
                return actrec::testing::GraphSpec{project_to_scalar(t, t.maxpool2x2(x)), {x}};
            });
            CHECK(err < tol);
        }
    }
    SUBCASE("affine and matvec") {
        std::vector<Array> in = {offset({4, 3}), offset({3}), offset({4})};
        Real err = gradcheck_graph(in, [&](Tape& t, const std::vector<Array>& v) {
            int w = t.leaf(v[0], true), x = t.leaf(v[1], true), b = t.leaf(v[2], true);
            return actrec::testing::GraphSpec{project_to_scalar(t, t.affine(w, x, b)), {w, x, b}};
        });
        CHECK(err < tol);
        std::vector<Array> in2 = {offset({4, 3}), offset({3})};
        Real err2 = gradcheck_graph(in2, [&](Tape& t, const std::vector<Array>& v) {
            int m = t.leaf(v[0], true), x = t.leaf(v[1], true);
            return actrec::testing::GraphSpec{project_to_scalar(t, t.matvec(m, x)), {m, x}};
        });
        CHECK(err2 < tol);
    }
    SUBCASE("pointwise and shape ops") {
        std::vector<Array> in = {offset({6}), offset({6})};
        Real err = gradcheck_graph(in, [&](Tape& t, const std::vector<Array>& v) {
            int a = t.leaf(v[0], true), b = t.leaf(v[1], true);
            int y = t.concat(t.relu(a), t.mul(t.sigmoid(b), t.tanh_(t.add(a, b))));
            y = t.concat(y, t.scale(t.softmax(a, 0), 2.5));
            return actrec::testing::GraphSpec{project_to_scalar(t, y), {a, b}};
        });
        CHECK(err < tol);
    }
    SUBCASE("stack_cols, reshape, mean") {
        std::vector<Array> in = {offset({4}), offset({4}), offset({4})};
        Real err = gradcheck_graph(in, [&](Tape& t, const std::vector<Array>& v) {
            int a = t.leaf(v[0], true), b = t.leaf(v[1], true), c = t.leaf(v[2], true);
            int m = t.stack_cols({a, b, c});
            int y = t.mean(t.reshape(m, {12}));
            return actrec::testing::GraphSpec{y, {a, b, c}};
        });
        CHECK(err < tol);
    }
    SUBCASE("dropout with pinned seed") {
        std::vector<Array> in = {offset({12})};
        Real err = gradcheck_graph(in, [&](Tape& t, const std::vector<Array>& v) {
            int a = t.leaf(v[0], true);
            int y = t.dropout(a, 0.4, true, 999);
            return actrec::testing::GraphSpec{project_to_scalar(t, y), {a}};
        });
        CHECK(err < tol);
    }
    SUBCASE("cross entropy") {
        std::vector<Array> in = {offset({5})};
        Real err = gradcheck_graph(in, [&](Tape& t, const std::vector<Array>& v) {
            int a = t.leaf(v[0], true);
            return actrec::testing::GraphSpec{t.cross_entropy(a, 1), {a}};
        });
        CHECK(err < tol);
    }
    SUBCASE("lstm step, all gate weights") {
        const int n = 3, m = 2;
        std::vector<Array> in;
        for (int rep = 0; rep < 4; ++rep) {
            in.push_back(offset({m, n}));
            in.push_back(offset({m, m}));
            in.push_back(offset({m}));
        }
        in.push_back(offset({n}));  // x
        in.push_back(offset({m}));  // h
        in.push_back(offset({m}));  // c
        Real err = gradcheck_graph(in, [&](Tape& t, const std::vector<Array>& v) {
            std::vector<int> ids;
            for (const Array& a : v) ids.push_back(t.leaf(a, true));
            LstmBinding p{ids[0], ids[1], ids[2],  ids[3], ids[4],  ids[5],
                          ids[6], ids[7], ids[8],  ids[9], ids[10], ids[11]};
            auto [h2, c2] = t.lstm_step(ids[12], ids[13], ids[14], p);
            int y = t.concat(h2, c2);
            return actrec::testing::GraphSpec{project_to_scalar(t, y), ids};
        });
        CHECK(err < tol);
    }
}

TEST_CASE("forward pass is bit-identical across runs") {
    auto run = [](uint64_t seed) {
        std::mt19937_64 rng(seed);
        Array x = Array::randn({6, 8, 3}, rng);
        Array k = Array::randn({3, 3, 3, 4}, rng);
        Tape t;
        int y = t.maxpool2x2(t.relu(t.conv2d(t.leaf(x), t.leaf(k), -1, Padding::Same)));
        int d = t.dropout(t.reshape(y, {t.val(y).size()}), 0.3, true, seed);
        return t.val(t.sum(d)).at(0);
    };
    CHECK(run(42) == run(42));
    CHECK(run(42) != run(43));
}
