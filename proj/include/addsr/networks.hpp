#pragma once

#include <atomic>
#include <cstdint>
#include <zlib.h>

#include "addsr/nn.hpp"

namespace addsr {

// ---------------------------------------------------------------------------
// Conditional denoiser: 3-scale encoder-decoder with residual blocks,
// sinusoidal timestep embedding, and a parallel condition branch fused into
// the encoder through zero-initialized 1x1 projections. The student and the
// frozen teacher share this architecture.
// ---------------------------------------------------------------------------

struct DenoiserArch {
    int width1 = 16, width2 = 32, width3 = 64;
    int temb_dim = 64;
    int num_classes = 0; // optional class-label hook; 0 disables it
    int max_timestep = 1000;

    bool operator==(const DenoiserArch&) const = default;
};

template <typename S>
struct DenoiserT {
    DenoiserArch arch;

    LinearT<S> temb_l1, temb_l2;
    ParamT<S> label_table; // num_classes x temb_dim, present only when num_classes > 0

    Conv2dT<S> cstem, cconv1, cdown1, cdown2;
    Conv2dT<S> inj1, inj2, inj3; // zero-initialized fusion projections (encoder)
    Conv2dT<S> inj4, inj5;       // zero-initialized fusion projections (decoder)

    Conv2dT<S> stem, down1, down2, upc1, upc2, head;
    ResBlockT<S> rb1, rb2, rbm, rbd2, rbd1;
    GroupNormT<S> hgn;

    mutable std::atomic<std::uint64_t> eval_count{0};

    DenoiserT() = default;

    DenoiserT(const DenoiserArch& a, Rng& rng) : arch(a) {
        const int w1 = a.width1, w2 = a.width2, w3 = a.width3;
        temb_l1.build("temb_l1", a.temb_dim, a.temb_dim);
        temb_l2.build("temb_l2", a.temb_dim, a.temb_dim);
        if (a.num_classes > 0) {
            label_table.name = "label_table";
            label_table.w.assign(static_cast<std::size_t>(a.num_classes) * a.temb_dim, S(0));
        }
        cstem.build("cond.stem", 3, w1, 3, 1, 1);
        cconv1.build("cond.conv1", w1, w1, 3, 1, 1);
        cdown1.build("cond.down1", w1, w2, 3, 2, 1);
        cdown2.build("cond.down2", w2, w3, 3, 2, 1);
        inj1.build("cond.inj1", w1, w1, 1, 1, 0);
        inj2.build("cond.inj2", w2, w2, 1, 1, 0);
        inj3.build("cond.inj3", w3, w3, 1, 1, 0);
        inj4.build("cond.inj4", w2, w2, 1, 1, 0);
        inj5.build("cond.inj5", w1, w1, 1, 1, 0);

        stem.build("stem", 3, w1, 3, 1, 1);
        rb1.build("rb1", w1, w1, a.temb_dim);
        down1.build("down1", w1, w2, 3, 2, 1);
        rb2.build("rb2", w2, w2, a.temb_dim);
        down2.build("down2", w2, w3, 3, 2, 1);
        rbm.build("rbm", w3, w3, a.temb_dim);
        upc1.build("upc1", w3, w2, 3, 1, 1);
        rbd2.build("rbd2", w2 + w2, w2, a.temb_dim);
        upc2.build("upc2", w2, w1, 3, 1, 1);
        rbd1.build("rbd1", w1 + w1, w1, a.temb_dim);
        hgn.build("head.gn", w1);
        head.build("head.conv", w1, 3, 3, 1, 1);

        temb_l1.init_he(rng);
        temb_l2.init_he(rng);
        if (a.num_classes > 0) fill_param_normal(label_table, rng, 0.02);
        cstem.init_he(rng);
        cconv1.init_he(rng);
        cdown1.init_he(rng);
        cdown2.init_he(rng);
        // inj1..inj3 and head stay zero-initialized.
        stem.init_he(rng);
        rb1.init(rng);
        down1.init_he(rng);
        rb2.init(rng);
        down2.init_he(rng);
        rbm.init(rng);
        upc1.init_he(rng);
        rbd2.init(rng);
        upc2.init_he(rng);
        rbd1.init(rng);
        register_indices();
    }

    DenoiserT(const DenoiserT& o) { *this = o; }
    DenoiserT& operator=(const DenoiserT& o) {
        if (this == &o) return *this;
        arch = o.arch;
        temb_l1 = o.temb_l1; temb_l2 = o.temb_l2; label_table = o.label_table;
        cstem = o.cstem; cconv1 = o.cconv1; cdown1 = o.cdown1; cdown2 = o.cdown2;
        inj1 = o.inj1; inj2 = o.inj2; inj3 = o.inj3; inj4 = o.inj4; inj5 = o.inj5;
        stem = o.stem; down1 = o.down1; down2 = o.down2; upc1 = o.upc1; upc2 = o.upc2; head = o.head;
        rb1 = o.rb1; rb2 = o.rb2; rbm = o.rbm; rbd2 = o.rbd2; rbd1 = o.rbd1; hgn = o.hgn;
        eval_count.store(o.eval_count.load());
        return *this;
    }

    ParamRefs<S> params() {
        ParamRefs<S> out;
        temb_l1.collect(out);
        temb_l2.collect(out);
        if (arch.num_classes > 0) out.push_back(&label_table);
        cstem.collect(out);
        cconv1.collect(out);
        cdown1.collect(out);
        cdown2.collect(out);
        inj1.collect(out);
        inj2.collect(out);
        inj3.collect(out);
        inj4.collect(out);
        inj5.collect(out);
        stem.collect(out);
        rb1.collect(out);
        down1.collect(out);
        rb2.collect(out);
        down2.collect(out);
        rbm.collect(out);
        upc1.collect(out);
        rbd2.collect(out);
        upc2.collect(out);
        rbd1.collect(out);
        hgn.collect(out);
        head.collect(out);
        return out;
    }

    void register_indices() {
        ParamRefs<S> ps = params();
        for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->idx = static_cast<int>(i);
    }

    struct Ctx {
        typename LinearT<S>::Ctx t1c, t2c;
        TensorT<S> t1, temb;
        typename Conv2dT<S>::Ctx cstemc, cconv1c, cdown1c, cdown2c, inj1c, inj2c, inj3c, inj4c,
            inj5c;
        TensorT<S> cs0, cf1_0, cf2_0, cf3_0, cf1, cf2, cf3;
        typename Conv2dT<S>::Ctx stemc, down1c, down2c, upc1c, upc2c, headc;
        typename ResBlockT<S>::Ctx rb1c, rb2c, rbmc, rbd2c, rbd1c;
        typename GroupNormT<S>::Ctx hgnc;
        TensorT<S> hg;
        int label = -1;
    };

    // Predicted noise for noisy input x at timestep s, conditioned on an
    // image already resized to x's resolution.
    TensorT<S> forward(const TensorT<S>& x, int s, const TensorT<S>& cond, int label, Ctx& ctx) const {
        require(x.c == 3, "denoiser: expected 3-channel input");
        require(cond.same_shape(x), "denoiser: condition resolution must match input after resize");
        require(x.h % 4 == 0 && x.w % 4 == 0, "denoiser: spatial dims must be divisible by 4");
        if (s < 1 || s > arch.max_timestep) throw std::out_of_range("denoiser: timestep outside schedule");
        if (label >= 0) {
            require(arch.num_classes > 0, "denoiser: class labels not configured");
            require(label < arch.num_classes, "denoiser: label out of range");
        }
        eval_count.fetch_add(1, std::memory_order_relaxed);
        ctx.label = label;

        ctx.t1 = temb_l1.forward(sinusoid_embed<S>(s, arch.temb_dim), ctx.t1c);
        ctx.temb = temb_l2.forward(silu(ctx.t1), ctx.t2c);
        if (label >= 0)
            for (int j = 0; j < arch.temb_dim; ++j)
                ctx.temb.v[j] += label_table.w[static_cast<std::size_t>(label) * arch.temb_dim + j];

        ctx.cs0 = cstem.forward(cond, ctx.cstemc);
        ctx.cf1_0 = cconv1.forward(silu(ctx.cs0), ctx.cconv1c);
        ctx.cf1 = silu(ctx.cf1_0);
        ctx.cf2_0 = cdown1.forward(ctx.cf1, ctx.cdown1c);
        ctx.cf2 = silu(ctx.cf2_0);
        ctx.cf3_0 = cdown2.forward(ctx.cf2, ctx.cdown2c);
        ctx.cf3 = silu(ctx.cf3_0);

        TensorT<S> h0 = stem.forward(x, ctx.stemc);
        TensorT<S> h1 = rb1.forward(h0, ctx.temb, ctx.rb1c);
        add_inplace(h1, inj1.forward(ctx.cf1, ctx.inj1c));
        TensorT<S> d1 = down1.forward(h1, ctx.down1c);
        TensorT<S> h2 = rb2.forward(d1, ctx.temb, ctx.rb2c);
        add_inplace(h2, inj2.forward(ctx.cf2, ctx.inj2c));
        TensorT<S> d2 = down2.forward(h2, ctx.down2c);
        add_inplace(d2, inj3.forward(ctx.cf3, ctx.inj3c));
        TensorT<S> hm = rbm.forward(d2, ctx.temb, ctx.rbmc);

        TensorT<S> u1 = upc1.forward(upsample2x_nearest(hm), ctx.upc1c);
        TensorT<S> o2 = rbd2.forward(concat_channels(u1, h2), ctx.temb, ctx.rbd2c);
        add_inplace(o2, inj4.forward(ctx.cf2, ctx.inj4c));
        TensorT<S> u2 = upc2.forward(upsample2x_nearest(o2), ctx.upc2c);
        TensorT<S> o1 = rbd1.forward(concat_channels(u2, h1), ctx.temb, ctx.rbd1c);
        add_inplace(o1, inj5.forward(ctx.cf1, ctx.inj5c));

        ctx.hg = hgn.forward(o1, ctx.hgnc);
        return head.forward(silu(ctx.hg), ctx.headc);
    }

    TensorT<S> forward(const TensorT<S>& x, int s, const TensorT<S>& cond, int label = -1) const {
        Ctx ctx;
        return forward(x, s, cond, label, ctx);
    }

    void backward(const Ctx& ctx, const TensorT<S>& gout, GradsT<S>& grads,
                  TensorT<S>* gx = nullptr, TensorT<S>* gcond = nullptr) const {
        const int w1 = arch.width1, w2 = arch.width2;

        TensorT<S> ghs;
        head.backward(ctx.headc, gout, grads, &ghs);
        TensorT<S> go1;
        hgn.backward(ctx.hgnc, silu_backward(ctx.hg, ghs), grads, &go1);

        TensorT<S> gtemb(arch.temb_dim, 1, 1);

        TensorT<S> gcf1_dec;
        inj5.backward(ctx.inj5c, go1, grads, &gcf1_dec);
        TensorT<S> gcat1 = rbd1.backward(ctx.rbd1c, go1, grads, gtemb);
        TensorT<S> gu2(w1, gcat1.h, gcat1.w), gh1(w1, gcat1.h, gcat1.w);
        std::copy(gcat1.v.begin(), gcat1.v.begin() + gu2.v.size(), gu2.v.begin());
        std::copy(gcat1.v.begin() + gu2.v.size(), gcat1.v.end(), gh1.v.begin());

        TensorT<S> gup2;
        upc2.backward(ctx.upc2c, gu2, grads, &gup2);
        TensorT<S> go2 = upsample2x_backward(gup2);

        TensorT<S> gcf2_dec;
        inj4.backward(ctx.inj4c, go2, grads, &gcf2_dec);
        TensorT<S> gcat2 = rbd2.backward(ctx.rbd2c, go2, grads, gtemb);
        TensorT<S> gu1(w2, gcat2.h, gcat2.w), gh2(w2, gcat2.h, gcat2.w);
        std::copy(gcat2.v.begin(), gcat2.v.begin() + gu1.v.size(), gu1.v.begin());
        std::copy(gcat2.v.begin() + gu1.v.size(), gcat2.v.end(), gh2.v.begin());

        TensorT<S> gup1;
        upc1.backward(ctx.upc1c, gu1, grads, &gup1);
        TensorT<S> ghm = upsample2x_backward(gup1);

        TensorT<S> gd2 = rbm.backward(ctx.rbmc, ghm, grads, gtemb);
        TensorT<S> gcf3;
        inj3.backward(ctx.inj3c, gd2, grads, &gcf3);
        TensorT<S> gh2b;
        down2.backward(ctx.down2c, gd2, grads, &gh2b);
        add_inplace(gh2, gh2b);

        TensorT<S> gcf2;
        inj2.backward(ctx.inj2c, gh2, grads, &gcf2);
        add_inplace(gcf2, gcf2_dec);
        TensorT<S> gd1 = rb2.backward(ctx.rb2c, gh2, grads, gtemb);
        TensorT<S> gh1b;
        down1.backward(ctx.down1c, gd1, grads, &gh1b);
        add_inplace(gh1, gh1b);

        TensorT<S> gcf1;
        inj1.backward(ctx.inj1c, gh1, grads, &gcf1);
        add_inplace(gcf1, gcf1_dec);
        TensorT<S> gh0 = rb1.backward(ctx.rb1c, gh1, grads, gtemb);
        stem.backward(ctx.stemc, gh0, grads, gx);

        // Condition branch.
        TensorT<S> gcf2b;
        cdown2.backward(ctx.cdown2c, silu_backward(ctx.cf3_0, gcf3), grads, &gcf2b);
        add_inplace(gcf2, gcf2b);
        TensorT<S> gcf1b;
        cdown1.backward(ctx.cdown1c, silu_backward(ctx.cf2_0, gcf2), grads, &gcf1b);
        add_inplace(gcf1, gcf1b);
        TensorT<S> gcs;
        cconv1.backward(ctx.cconv1c, silu_backward(ctx.cf1_0, gcf1), grads, &gcs);
        cstem.backward(ctx.cstemc, silu_backward(ctx.cs0, gcs), grads, gcond);

        // Timestep embedding (and optional label row).
        if (ctx.label >= 0) {
            S* row = grads.g[label_table.idx].data() + static_cast<std::size_t>(ctx.label) * arch.temb_dim;
            for (int j = 0; j < arch.temb_dim; ++j) row[j] += gtemb.v[j];
        }
        TensorT<S> gt1s;
        temb_l2.backward(ctx.t2c, gtemb, grads, &gt1s);
        temb_l1.backward(ctx.t1c, silu_backward(ctx.t1, gt1s), grads, nullptr);
    }
};

// ---------------------------------------------------------------------------
// Conditional discriminator: strided conv encoder over the HR image with
// projection conditioning on an embedding of the LR image.
// ---------------------------------------------------------------------------

struct DiscriminatorArch {
    int width = 16;
    int cond_width = 16;
    int scale = 4; // expected HR/LR resolution ratio

    bool operator==(const DiscriminatorArch&) const = default;
};

template <typename S>
struct DiscriminatorT {
    DiscriminatorArch arch;

    Conv2dT<S> c1, c2, c3, c4;
    Conv2dT<S> ce1, ce2;
    LinearT<S> plin, headl;

    DiscriminatorT() = default;

    DiscriminatorT(const DiscriminatorArch& a, Rng& rng) : arch(a) {
        const int w = a.width, cw = a.cond_width;
        c1.build("d.c1", 3, w, 3, 2, 1);
        c2.build("d.c2", w, 2 * w, 3, 2, 1);
        c3.build("d.c3", 2 * w, 4 * w, 3, 2, 1);
        c4.build("d.c4", 4 * w, 4 * w, 3, 1, 1);
        ce1.build("d.ce1", 3, cw, 3, 1, 1);
        ce2.build("d.ce2", cw, 2 * cw, 3, 2, 1);
        plin.build("d.proj", 2 * cw, 4 * w);
        headl.build("d.head", 4 * w, 1);
        c1.init_he(rng);
        c2.init_he(rng);
        c3.init_he(rng);
        c4.init_he(rng);
        ce1.init_he(rng);
        ce2.init_he(rng);
        plin.init_he(rng);
        headl.init_he(rng);
        register_indices();
    }

    ParamRefs<S> params() {
        ParamRefs<S> out;
        c1.collect(out);
        c2.collect(out);
        c3.collect(out);
        c4.collect(out);
        ce1.collect(out);
        ce2.collect(out);
        plin.collect(out);
        headl.collect(out);
        return out;
    }

    void register_indices() {
        ParamRefs<S> ps = params();
        for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->idx = static_cast<int>(i);
    }

    struct Ctx {
        typename Conv2dT<S>::Ctx c1c, c2c, c3c, c4c, ce1c, ce2c;
        TensorT<S> a1, a2, a3, a4;       // conv pre-activations
        TensorT<S> e1, e2;               // cond pre-activations
        TensorT<S> f, e, pe;             // pooled features, cond embedding, projection
        int fh = 0, fw = 0, eh = 0, ew = 0;
    };

    // One real-valued logit for the image; cond_img stays at LR resolution.
    S forward(const TensorT<S>& img, const TensorT<S>& cond_img, Ctx& ctx) const {
        require(img.c == 3 && cond_img.c == 3, "discriminator: expected 3-channel inputs");
        require(img.h == arch.scale * cond_img.h && img.w == arch.scale * cond_img.w,
                "discriminator: resolution mismatch between image and condition");

        ctx.a1 = c1.forward(img, ctx.c1c);
        ctx.a2 = c2.forward(silu(ctx.a1), ctx.c2c);
        ctx.a3 = c3.forward(silu(ctx.a2), ctx.c3c);
        ctx.a4 = c4.forward(silu(ctx.a3), ctx.c4c);
        TensorT<S> act4 = silu(ctx.a4);
        ctx.fh = act4.h; ctx.fw = act4.w;
        ctx.f = global_avg_pool(act4);

        ctx.e1 = ce1.forward(cond_img, ctx.ce1c);
        ctx.e2 = ce2.forward(silu(ctx.e1), ctx.ce2c);
        TensorT<S> acte = silu(ctx.e2);
        ctx.eh = acte.h; ctx.ew = acte.w;
        ctx.e = global_avg_pool(acte);

        typename LinearT<S>::Ctx plinc;
        ctx.pe = plin.forward(ctx.e, plinc);

        typename LinearT<S>::Ctx headc;
        TensorT<S> h = headl.forward(ctx.f, headc);

        double logit = static_cast<double>(h.v[0]);
        for (int i = 0; i < 4 * arch.width; ++i)
            logit += static_cast<double>(ctx.pe.v[i]) * static_cast<double>(ctx.f.v[i]);
        return static_cast<S>(logit);
    }

    void backward(const Ctx& ctx, S glogit, GradsT<S>& grads,
                  TensorT<S>* gimg = nullptr, TensorT<S>* gcond = nullptr) const {
        const int fdim = 4 * arch.width;

        // head(f) + <pe, f>
        TensorT<S> gf(fdim, 1, 1), gpe(fdim, 1, 1);
        for (int i = 0; i < fdim; ++i) {
            gf.v[i] = glogit * (headl.w.w[i] + ctx.pe.v[i]);
            gpe.v[i] = glogit * ctx.f.v[i];
        }
        // head params: dlogit/dw = f, dlogit/db = 1
        for (int i = 0; i < fdim; ++i) grads.g[headl.w.idx][i] += glogit * ctx.f.v[i];
        grads.g[headl.b.idx][0] += glogit;

        // projection linear: pe = plin(e)
        typename LinearT<S>::Ctx plinc;
        plinc.x = ctx.e;
        TensorT<S> ge;
        plin.backward(plinc, gpe, grads, &ge);

        // condition encoder
        TensorT<S> gacte = global_avg_pool_backward(ge, ctx.eh, ctx.ew);
        TensorT<S> ge1;
        ce2.backward(ctx.ce2c, silu_backward(ctx.e2, gacte), grads, &ge1);
        ce1.backward(ctx.ce1c, silu_backward(ctx.e1, ge1), grads, gcond);

        // image encoder
        TensorT<S> gact4 = global_avg_pool_backward(gf, ctx.fh, ctx.fw);
        TensorT<S> ga3;
        c4.backward(ctx.c4c, silu_backward(ctx.a4, gact4), grads, &ga3);
        TensorT<S> ga2;
        c3.backward(ctx.c3c, silu_backward(ctx.a3, ga3), grads, &ga2);
        TensorT<S> ga1;
        c2.backward(ctx.c2c, silu_backward(ctx.a2, ga2), grads, &ga1);
        c1.backward(ctx.c1c, silu_backward(ctx.a1, ga1), grads, gimg);
    }
};

// CRC32 over the raw bytes of all parameters in registration order.
template <typename S>
std::uint32_t params_crc32(const ParamRefs<S>& params) {
    uLong crc = crc32(0L, Z_NULL, 0);
    for (const auto* p : params)
        crc = crc32(crc, reinterpret_cast<const Bytef*>(p->w.data()),
                    static_cast<uInt>(p->w.size() * sizeof(S)));
    return static_cast<std::uint32_t>(crc);
}

// Fill every parameter (including zero-initialized ones) with small random
// values; used by gradient-check tests so no path has trivially zero output.
template <typename S>
void randomize_params(const ParamRefs<S>& params, Rng& rng, double stddev = 0.1) {
    for (auto* p : params)
        for (auto& v : p->w) v = static_cast<S>(stddev * rng.normal());
}

using Denoiser = DenoiserT<float>;
using Discriminator = DiscriminatorT<float>;

} // namespace addsr
