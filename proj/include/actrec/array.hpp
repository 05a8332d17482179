#ifndef ACTREC_ARRAY_HPP
#define ACTREC_ARRAY_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "actrec/util.hpp"

namespace actrec::ad {

// All math runs in 64-bit; checkpoints narrow to 32-bit on disk.
using Real = double;
using Shape = std::vector<int>;

inline long long shape_size(const Shape& s) {
    long long n = 1;
    for (int d : s) {
        if (d <= 0) fail("array: non-positive extent in shape ", shape_str(s));
        n *= d;
    }
    return n;
}

// Dense row-major array. 3-D tensors are indexed [h][w][c], 4-D kernels [kh][kw][c][f].
class Array {
  public:
    Shape shape;
    std::vector<Real> v;

    Array() = default;
    explicit Array(Shape s, Real fill = 0.0)
        : shape(std::move(s)), v(static_cast<size_t>(shape_size(shape)), fill) {}
    Array(Shape s, std::vector<Real> values) : shape(std::move(s)), v(std::move(values)) {
        if (static_cast<long long>(v.size()) != shape_size(shape))
            fail("array: ", v.size(), " values do not fill shape ", shape_str(shape));
    }

    int size() const { return static_cast<int>(v.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    Real& at(int i) { return v[static_cast<size_t>(i)]; }
    const Real& at(int i) const { return v[static_cast<size_t>(i)]; }
    Real& at(int i, int j) { return v[static_cast<size_t>(i * shape[1] + j)]; }
    const Real& at(int i, int j) const { return v[static_cast<size_t>(i * shape[1] + j)]; }
    Real& at(int i, int j, int k) {
        return v[static_cast<size_t>((i * shape[1] + j) * shape[2] + k)];
    }
    const Real& at(int i, int j, int k) const {
        return v[static_cast<size_t>((i * shape[1] + j) * shape[2] + k)];
    }
    Real& at(int i, int j, int k, int l) {
        return v[static_cast<size_t>(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
    }
    const Real& at(int i, int j, int k, int l) const {
        return v[static_cast<size_t>(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
    }

    bool same_shape(const Array& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (Real x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    static Array zeros(Shape s) { return Array(std::move(s)); }
    static Array full(Shape s, Real x) { return Array(std::move(s), x); }

    static Array randn(Shape s, std::mt19937_64& rng, Real stddev = 1.0) {
        Array a(std::move(s));
        std::normal_distribution<Real> d(0.0, stddev);
        for (Real& x : a.v) x = d(rng);
        return a;
    }

    static Array uniform(Shape s, std::mt19937_64& rng, Real lo, Real hi) {
        Array a(std::move(s));
        std::uniform_real_distribution<Real> d(lo, hi);
        for (Real& x : a.v) x = d(rng);
        return a;
    }
};

inline bool operator==(const Array& a, const Array& b) { return a.shape == b.shape && a.v == b.v; }

inline Real max_abs_diff(const Array& a, const Array& b) {
    if (!a.same_shape(b)) fail("max_abs_diff: shape ", shape_str(a.shape), " vs ", shape_str(b.shape));
    Real m = 0;
    for (int i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.at(i) - b.at(i)));
    return m;
}

}  // namespace actrec::ad

#endif
