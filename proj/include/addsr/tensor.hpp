#pragma once

#include <cstddef>
#include <vector>

#include "addsr/common.hpp"
#include "addsr/rng.hpp"

namespace addsr {

// Dense CHW tensor. Images use c=3; embeddings use h=w=1.
template <typename S>
struct TensorT {
    int c = 0, h = 0, w = 0;
    std::vector<S> v;

    TensorT() = default;
    TensorT(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, S(0)) {}

    static TensorT zeros_like(const TensorT& o) { return TensorT(o.c, o.h, o.w); }

    std::size_t size() const { return v.size(); }
    bool same_shape(const TensorT& o) const { return c == o.c && h == o.h && w == o.w; }

    S& at(int ch, int y, int x) { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
    S at(int ch, int y, int x) const { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }

    S* plane(int ch) { return v.data() + static_cast<std::size_t>(ch) * h * w; }
    const S* plane(int ch) const { return v.data() + static_cast<std::size_t>(ch) * h * w; }
};

using Tensor = TensorT<float>;

template <typename S>
void fill_normal(TensorT<S>& t, Rng& rng) {
    for (auto& x : t.v) x = static_cast<S>(rng.normal());
}

template <typename S>
TensorT<S> randn_like(const TensorT<S>& o, Rng& rng) {
    TensorT<S> t(o.c, o.h, o.w);
    fill_normal(t, rng);
    return t;
}

template <typename S>
void add_inplace(TensorT<S>& a, const TensorT<S>& b) {
    require(a.same_shape(b), "add_inplace: shape mismatch");
    for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
}

template <typename S>
double mean_squared_error(const TensorT<S>& a, const TensorT<S>& b) {
    require(a.same_shape(b), "mean_squared_error: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) {
        const double d = static_cast<double>(a.v[i]) - static_cast<double>(b.v[i]);
        acc += d * d;
    }
    return a.v.empty() ? 0.0 : acc / static_cast<double>(a.v.size());
}

template <typename S>
TensorT<S> concat_channels(const TensorT<S>& a, const TensorT<S>& b) {
    require(a.h == b.h && a.w == b.w, "concat_channels: spatial mismatch");
    TensorT<S> out(a.c + b.c, a.h, a.w);
    std::copy(a.v.begin(), a.v.end(), out.v.begin());
    std::copy(b.v.begin(), b.v.end(), out.v.begin() + a.v.size());
    return out;
}

} // namespace addsr
