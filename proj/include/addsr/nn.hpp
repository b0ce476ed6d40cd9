#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "addsr/rng.hpp"
#include "addsr/tensor.hpp"

// Small layer library with explicit forward traces and hand-written backward
// passes. Everything is templated on the scalar type: training runs in float,
// gradient checks instantiate the same code in double. Forward passes are
// const over parameters; per-call state lives in caller-owned Ctx structs, so
// concurrent forwards are safe. Gradients go into a caller-owned GradsT
// indexed by the parameter registration order.

namespace addsr {

template <typename S>
struct ParamT {
    std::string name;
    std::vector<S> w;
    int idx = -1; // position in the owning net's registration order
};

template <typename S>
using ParamRefs = std::vector<ParamT<S>*>;

template <typename S>
struct GradsT {
    std::vector<std::vector<S>> g;

    void init(const ParamRefs<S>& params) {
        g.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) g[i].assign(params[i]->w.size(), S(0));
    }
    void zero() {
        for (auto& v : g)
            std::fill(v.begin(), v.end(), S(0));
    }
    void accumulate(const GradsT& other, double scale) {
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = 0; j < g[i].size(); ++j)
                g[i][j] += static_cast<S>(scale * static_cast<double>(other.g[i][j]));
    }
};

template <typename S>
std::size_t param_count(const ParamRefs<S>& params) {
    std::size_t n = 0;
    for (const auto* p : params) n += p->w.size();
    return n;
}

template <typename S>
void fill_param_normal(ParamT<S>& p, Rng& rng, double stddev) {
    for (auto& v : p.w) v = static_cast<S>(stddev * rng.normal());
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

template <typename S>
inline S sigmoid(S x) {
    return S(1) / (S(1) + std::exp(-x));
}

template <typename S>
TensorT<S> silu(const TensorT<S>& x) {
    TensorT<S> y(x.c, x.h, x.w);
    for (std::size_t i = 0; i < x.v.size(); ++i) y.v[i] = x.v[i] * sigmoid(x.v[i]);
    return y;
}

template <typename S>
TensorT<S> silu_backward(const TensorT<S>& x, const TensorT<S>& gy) {
    TensorT<S> gx(x.c, x.h, x.w);
    for (std::size_t i = 0; i < x.v.size(); ++i) {
        const S s = sigmoid(x.v[i]);
        gx.v[i] = gy.v[i] * s * (S(1) + x.v[i] * (S(1) - s));
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Conv2d
// ---------------------------------------------------------------------------

template <typename S>
struct Conv2dT {
    int cin = 0, cout = 0, k = 3, stride = 1, pad = 1;
    ParamT<S> w, b; // w: cout x (cin*k*k)

    struct Ctx {
        std::vector<S> col; // (cin*k*k) x (oh*ow)
        int ih = 0, iw = 0, oh = 0, ow = 0;
    };

    void build(const std::string& name, int cin_, int cout_, int k_, int stride_, int pad_) {
        cin = cin_; cout = cout_; k = k_; stride = stride_; pad = pad_;
        w.name = name + ".w";
        b.name = name + ".b";
        w.w.assign(static_cast<std::size_t>(cout) * cin * k * k, S(0));
        b.w.assign(static_cast<std::size_t>(cout), S(0));
    }

    void init_he(Rng& rng) {
        fill_param_normal(w, rng, std::sqrt(2.0 / (static_cast<double>(cin) * k * k)));
        std::fill(b.w.begin(), b.w.end(), S(0));
    }

    void collect(ParamRefs<S>& out) {
        out.push_back(&w);
        out.push_back(&b);
    }

    using MatRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    TensorT<S> forward(const TensorT<S>& x, Ctx& ctx) const {
        require(x.c == cin, "Conv2d: channel mismatch");
        const int oh = (x.h + 2 * pad - k) / stride + 1;
        const int ow = (x.w + 2 * pad - k) / stride + 1;
        const int cikk = cin * k * k;
        const int n = oh * ow;
        ctx.ih = x.h; ctx.iw = x.w; ctx.oh = oh; ctx.ow = ow;
        ctx.col.assign(static_cast<std::size_t>(cikk) * n, S(0));

        for (int ci = 0; ci < cin; ++ci) {
            const S* plane = x.plane(ci);
            for (int dy = 0; dy < k; ++dy)
                for (int dx = 0; dx < k; ++dx) {
                    S* dst = ctx.col.data() + (static_cast<std::size_t>(ci) * k * k + dy * k + dx) * n;
                    for (int oy = 0; oy < oh; ++oy) {
                        const int sy = oy * stride + dy - pad;
                        if (sy < 0 || sy >= x.h) continue;
                        const S* src_row = plane + static_cast<std::size_t>(sy) * x.w;
                        S* dst_row = dst + static_cast<std::size_t>(oy) * ow;
                        for (int ox = 0; ox < ow; ++ox) {
                            const int sx = ox * stride + dx - pad;
                            if (sx >= 0 && sx < x.w) dst_row[ox] = src_row[sx];
                        }
                    }
                }
        }

        TensorT<S> out(cout, oh, ow);
        Eigen::Map<const MatRM> W(w.w.data(), cout, cikk);
        Eigen::Map<const MatRM> Col(ctx.col.data(), cikk, n);
        Eigen::Map<MatRM> O(out.v.data(), cout, n);
        O.noalias() = W * Col;
        for (int co = 0; co < cout; ++co) {
            S* row = out.plane(co);
            const S bias = b.w[co];
            for (int i = 0; i < n; ++i) row[i] += bias;
        }
        return out;
    }

    void backward(const Ctx& ctx, const TensorT<S>& gy, GradsT<S>& grads, TensorT<S>* gx) const {
        const int cikk = cin * k * k;
        const int n = ctx.oh * ctx.ow;
        Eigen::Map<const MatRM> Gy(gy.v.data(), cout, n);
        Eigen::Map<const MatRM> Col(ctx.col.data(), cikk, n);
        Eigen::Map<MatRM> Gw(grads.g[w.idx].data(), cout, cikk);
        Gw.noalias() += Gy * Col.transpose();
        for (int co = 0; co < cout; ++co) {
            double acc = 0.0;
            const S* row = gy.plane(co);
            for (int i = 0; i < n; ++i) acc += static_cast<double>(row[i]);
            grads.g[b.idx][co] += static_cast<S>(acc);
        }
        if (!gx) return;

        std::vector<S> gcol(static_cast<std::size_t>(cikk) * n);
        Eigen::Map<const MatRM> W(w.w.data(), cout, cikk);
        Eigen::Map<MatRM> Gcol(gcol.data(), cikk, n);
        Gcol.noalias() = W.transpose() * Gy;

        *gx = TensorT<S>(cin, ctx.ih, ctx.iw);
        for (int ci = 0; ci < cin; ++ci) {
            S* plane = gx->plane(ci);
            for (int dy = 0; dy < k; ++dy)
                for (int dx = 0; dx < k; ++dx) {
                    const S* src = gcol.data() + (static_cast<std::size_t>(ci) * k * k + dy * k + dx) * n;
                    for (int oy = 0; oy < ctx.oh; ++oy) {
                        const int sy = oy * stride + dy - pad;
                        if (sy < 0 || sy >= ctx.ih) continue;
                        S* dst_row = plane + static_cast<std::size_t>(sy) * ctx.iw;
                        const S* src_row = src + static_cast<std::size_t>(oy) * ctx.ow;
                        for (int ox = 0; ox < ctx.ow; ++ox) {
                            const int sx = ox * stride + dx - pad;
                            if (sx >= 0 && sx < ctx.iw) dst_row[sx] += src_row[ox];
                        }
                    }
                }
        }
    }
};

// ---------------------------------------------------------------------------
// Linear (vectors as TensorT with h=w=1)
// ---------------------------------------------------------------------------

template <typename S>
struct LinearT {
    int in = 0, out = 0;
    ParamT<S> w, b; // w: out x in

    struct Ctx {
        TensorT<S> x;
    };

    void build(const std::string& name, int in_, int out_) {
        in = in_; out = out_;
        w.name = name + ".w";
        b.name = name + ".b";
        w.w.assign(static_cast<std::size_t>(out) * in, S(0));
        b.w.assign(static_cast<std::size_t>(out), S(0));
    }

    void init_he(Rng& rng) {
        fill_param_normal(w, rng, std::sqrt(1.0 / in));
        std::fill(b.w.begin(), b.w.end(), S(0));
    }

    void collect(ParamRefs<S>& outp) {
        outp.push_back(&w);
        outp.push_back(&b);
    }

    TensorT<S> forward(const TensorT<S>& x, Ctx& ctx) const {
        require(static_cast<int>(x.v.size()) == in, "Linear: input size mismatch");
        ctx.x = x;
        TensorT<S> y(out, 1, 1);
        for (int o = 0; o < out; ++o) {
            double acc = static_cast<double>(b.w[o]);
            const S* row = w.w.data() + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) acc += static_cast<double>(row[i]) * x.v[i];
            y.v[o] = static_cast<S>(acc);
        }
        return y;
    }

    void backward(const Ctx& ctx, const TensorT<S>& gy, GradsT<S>& grads, TensorT<S>* gx) const {
        for (int o = 0; o < out; ++o) {
            grads.g[b.idx][o] += gy.v[o];
            S* grow = grads.g[w.idx].data() + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) grow[i] += gy.v[o] * ctx.x.v[i];
        }
        if (!gx) return;
        *gx = TensorT<S>(in, 1, 1);
        for (int i = 0; i < in; ++i) {
            double acc = 0.0;
            for (int o = 0; o < out; ++o)
                acc += static_cast<double>(w.w[static_cast<std::size_t>(o) * in + i]) * gy.v[o];
            gx->v[i] = static_cast<S>(acc);
        }
    }
};

// ---------------------------------------------------------------------------
// GroupNorm
// ---------------------------------------------------------------------------

template <typename S>
struct GroupNormT {
    int channels = 0, groups = 1;
    double eps = 1e-5;
    ParamT<S> gamma, beta;

    struct Ctx {
        TensorT<S> xhat;
        std::vector<double> inv; // per group
    };

    static int pick_groups(int c) {
        for (int g : {8, 4, 2})
            if (c % g == 0) return g;
        return 1;
    }

    void build(const std::string& name, int channels_) {
        channels = channels_;
        groups = pick_groups(channels_);
        gamma.name = name + ".gamma";
        beta.name = name + ".beta";
        gamma.w.assign(channels, S(1));
        beta.w.assign(channels, S(0));
    }

    void collect(ParamRefs<S>& out) {
        out.push_back(&gamma);
        out.push_back(&beta);
    }

    TensorT<S> forward(const TensorT<S>& x, Ctx& ctx) const {
        require(x.c == channels, "GroupNorm: channel mismatch");
        const int per = channels / groups;
        const std::size_t plane_sz = static_cast<std::size_t>(x.h) * x.w;
        ctx.xhat = TensorT<S>(x.c, x.h, x.w);
        ctx.inv.assign(groups, 0.0);
        TensorT<S> y(x.c, x.h, x.w);
        for (int g = 0; g < groups; ++g) {
            const std::size_t base = static_cast<std::size_t>(g) * per * plane_sz;
            const std::size_t m = static_cast<std::size_t>(per) * plane_sz;
            double mean = 0.0;
            for (std::size_t i = 0; i < m; ++i) mean += static_cast<double>(x.v[base + i]);
            mean /= static_cast<double>(m);
            double var = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double d = static_cast<double>(x.v[base + i]) - mean;
                var += d * d;
            }
            var /= static_cast<double>(m);
            const double inv = 1.0 / std::sqrt(var + eps);
            ctx.inv[g] = inv;
            for (int cc = 0; cc < per; ++cc) {
                const int c = g * per + cc;
                const S gam = gamma.w[c], bet = beta.w[c];
                for (std::size_t i = 0; i < plane_sz; ++i) {
                    const std::size_t off = static_cast<std::size_t>(c) * plane_sz + i;
                    const S xh = static_cast<S>((static_cast<double>(x.v[off]) - mean) * inv);
                    ctx.xhat.v[off] = xh;
                    y.v[off] = gam * xh + bet;
                }
            }
        }
        return y;
    }

    void backward(const Ctx& ctx, const TensorT<S>& gy, GradsT<S>& grads, TensorT<S>* gx) const {
        const int per = channels / groups;
        const std::size_t plane_sz = ctx.xhat.v.size() / channels;
        if (gx) *gx = TensorT<S>(ctx.xhat.c, ctx.xhat.h, ctx.xhat.w);
        for (int g = 0; g < groups; ++g) {
            const std::size_t m = static_cast<std::size_t>(per) * plane_sz;
            double s1 = 0.0, s2 = 0.0;
            for (int cc = 0; cc < per; ++cc) {
                const int c = g * per + cc;
                const double gam = static_cast<double>(gamma.w[c]);
                double gch = 0.0, bch = 0.0;
                for (std::size_t i = 0; i < plane_sz; ++i) {
                    const std::size_t off = static_cast<std::size_t>(c) * plane_sz + i;
                    const double dxh = static_cast<double>(gy.v[off]) * gam;
                    s1 += dxh;
                    s2 += dxh * static_cast<double>(ctx.xhat.v[off]);
                    gch += static_cast<double>(gy.v[off]) * static_cast<double>(ctx.xhat.v[off]);
                    bch += static_cast<double>(gy.v[off]);
                }
                grads.g[gamma.idx][c] += static_cast<S>(gch);
                grads.g[beta.idx][c] += static_cast<S>(bch);
            }
            if (!gx) continue;
            s1 /= static_cast<double>(m);
            s2 /= static_cast<double>(m);
            for (int cc = 0; cc < per; ++cc) {
                const int c = g * per + cc;
                const double gam = static_cast<double>(gamma.w[c]);
                for (std::size_t i = 0; i < plane_sz; ++i) {
                    const std::size_t off = static_cast<std::size_t>(c) * plane_sz + i;
                    const double dxh = static_cast<double>(gy.v[off]) * gam;
                    gx->v[off] = static_cast<S>(ctx.inv[g] *
                                                (dxh - s1 - static_cast<double>(ctx.xhat.v[off]) * s2));
                }
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Resampling and pooling
// ---------------------------------------------------------------------------

template <typename S>
TensorT<S> upsample2x_nearest(const TensorT<S>& x) {
    TensorT<S> y(x.c, x.h * 2, x.w * 2);
    for (int c = 0; c < x.c; ++c)
        for (int yy = 0; yy < y.h; ++yy)
            for (int xx = 0; xx < y.w; ++xx)
                y.at(c, yy, xx) = x.at(c, yy / 2, xx / 2);
    return y;
}

template <typename S>
TensorT<S> upsample2x_backward(const TensorT<S>& gy) {
    TensorT<S> gx(gy.c, gy.h / 2, gy.w / 2);
    for (int c = 0; c < gy.c; ++c)
        for (int yy = 0; yy < gy.h; ++yy)
            for (int xx = 0; xx < gy.w; ++xx)
                gx.at(c, yy / 2, xx / 2) += gy.at(c, yy, xx);
    return gx;
}

template <typename S>
TensorT<S> global_avg_pool(const TensorT<S>& x) {
    TensorT<S> y(x.c, 1, 1);
    const std::size_t plane_sz = static_cast<std::size_t>(x.h) * x.w;
    for (int c = 0; c < x.c; ++c) {
        double acc = 0.0;
        const S* plane = x.plane(c);
        for (std::size_t i = 0; i < plane_sz; ++i) acc += static_cast<double>(plane[i]);
        y.v[c] = static_cast<S>(acc / static_cast<double>(plane_sz));
    }
    return y;
}

template <typename S>
TensorT<S> global_avg_pool_backward(const TensorT<S>& gy, int h, int w) {
    TensorT<S> gx(gy.c, h, w);
    const S scale = S(1) / static_cast<S>(h * w);
    for (int c = 0; c < gy.c; ++c) {
        S* plane = gx.plane(c);
        const S v = gy.v[c] * scale;
        for (int i = 0; i < h * w; ++i) plane[i] = v;
    }
    return gx;
}

// Sinusoidal timestep embedding; no parameters.
template <typename S>
TensorT<S> sinusoid_embed(int s, int dim) {
    TensorT<S> e(dim, 1, 1);
    const int half = dim / 2;
    for (int j = 0; j < half; ++j) {
        const double freq = std::exp(-std::log(10000.0) * j / std::max(1, half - 1));
        e.v[j] = static_cast<S>(std::sin(s * freq));
        e.v[half + j] = static_cast<S>(std::cos(s * freq));
    }
    return e;
}

// ---------------------------------------------------------------------------
// Residual block with timestep conditioning
// ---------------------------------------------------------------------------

template <typename S>
struct ResBlockT {
    int cin = 0, cout = 0;
    GroupNormT<S> gn1, gn2;
    Conv2dT<S> conv1, conv2;
    LinearT<S> temb_proj;
    Conv2dT<S> skip; // 1x1, only when cin != cout
    bool has_skip = false;

    struct Ctx {
        typename GroupNormT<S>::Ctx gn1c, gn2c;
        typename Conv2dT<S>::Ctx c1c, c2c, skipc;
        typename LinearT<S>::Ctx tc;
        TensorT<S> a, d, temb_in;
    };

    void build(const std::string& name, int cin_, int cout_, int temb_dim) {
        cin = cin_; cout = cout_;
        gn1.build(name + ".gn1", cin);
        conv1.build(name + ".conv1", cin, cout, 3, 1, 1);
        temb_proj.build(name + ".temb", temb_dim, cout);
        gn2.build(name + ".gn2", cout);
        conv2.build(name + ".conv2", cout, cout, 3, 1, 1);
        has_skip = (cin != cout);
        if (has_skip) skip.build(name + ".skip", cin, cout, 1, 1, 0);
    }

    void init(Rng& rng) {
        conv1.init_he(rng);
        conv2.init_he(rng);
        temb_proj.init_he(rng);
        if (has_skip) skip.init_he(rng);
    }

    void collect(ParamRefs<S>& out) {
        gn1.collect(out);
        conv1.collect(out);
        temb_proj.collect(out);
        gn2.collect(out);
        conv2.collect(out);
        if (has_skip) skip.collect(out);
    }

    TensorT<S> forward(const TensorT<S>& x, const TensorT<S>& temb, Ctx& ctx) const {
        ctx.a = gn1.forward(x, ctx.gn1c);
        TensorT<S> b = silu(ctx.a);
        TensorT<S> c = conv1.forward(b, ctx.c1c);
        ctx.temb_in = temb;
        TensorT<S> tb = temb_proj.forward(silu(temb), ctx.tc);
        const std::size_t plane_sz = static_cast<std::size_t>(c.h) * c.w;
        for (int ch = 0; ch < cout; ++ch) {
            S* plane = c.plane(ch);
            const S v = tb.v[ch];
            for (std::size_t i = 0; i < plane_sz; ++i) plane[i] += v;
        }
        ctx.d = gn2.forward(c, ctx.gn2c);
        TensorT<S> e = silu(ctx.d);
        TensorT<S> f = conv2.forward(e, ctx.c2c);
        if (has_skip) {
            add_inplace(f, skip.forward(x, ctx.skipc));
        } else {
            add_inplace(f, x);
        }
        return f;
    }

    // Returns gx; accumulates the timestep-embedding gradient into gtemb.
    TensorT<S> backward(const Ctx& ctx, const TensorT<S>& gy, GradsT<S>& grads, TensorT<S>& gtemb) const {
        TensorT<S> ge;
        conv2.backward(ctx.c2c, gy, grads, &ge);
        TensorT<S> gd = silu_backward(ctx.d, ge);
        TensorT<S> gc;
        gn2.backward(ctx.gn2c, gd, grads, &gc);

        // Broadcast bias over space -> gradient is the spatial sum per channel.
        TensorT<S> gtb(cout, 1, 1);
        const std::size_t plane_sz = static_cast<std::size_t>(gc.h) * gc.w;
        for (int ch = 0; ch < cout; ++ch) {
            double acc = 0.0;
            const S* plane = gc.plane(ch);
            for (std::size_t i = 0; i < plane_sz; ++i) acc += static_cast<double>(plane[i]);
            gtb.v[ch] = static_cast<S>(acc);
        }
        TensorT<S> gtact;
        temb_proj.backward(ctx.tc, gtb, grads, &gtact);
        add_inplace(gtemb, silu_backward(ctx.temb_in, gtact));

        TensorT<S> gb;
        conv1.backward(ctx.c1c, gc, grads, &gb);
        TensorT<S> ga = silu_backward(ctx.a, gb);
        TensorT<S> gx;
        gn1.backward(ctx.gn1c, ga, grads, &gx);

        if (has_skip) {
            TensorT<S> gskip;
            skip.backward(ctx.skipc, gy, grads, &gskip);
            add_inplace(gx, gskip);
        } else {
            add_inplace(gx, gy);
        }
        return gx;
    }
};

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

template <typename S>
struct AdamT {
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long t = 0;
    std::vector<std::vector<S>> m, v;

    void init(const ParamRefs<S>& params) {
        m.resize(params.size());
        v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i].assign(params[i]->w.size(), S(0));
            v[i].assign(params[i]->w.size(), S(0));
        }
        t = 0;
    }

    void step(const ParamRefs<S>& params, const GradsT<S>& grads) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, t);
        const double bc2 = 1.0 - std::pow(beta2, t);
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& pw = params[i]->w;
            const auto& gr = grads.g[i];
            for (std::size_t j = 0; j < pw.size(); ++j) {
                const double g = static_cast<double>(gr[j]);
                const double mm = beta1 * static_cast<double>(m[i][j]) + (1.0 - beta1) * g;
                const double vv = beta2 * static_cast<double>(v[i][j]) + (1.0 - beta2) * g * g;
                m[i][j] = static_cast<S>(mm);
                v[i][j] = static_cast<S>(vv);
                pw[j] -= static_cast<S>(lr * (mm / bc1) / (std::sqrt(vv / bc2) + eps));
            }
        }
    }
};

} // namespace addsr
