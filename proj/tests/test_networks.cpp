#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "addsr/networks.hpp"
#include "grad_check.hpp"

using namespace addsr;

namespace {

template <typename S>
TensorT<S> random_tensor(int c, int h, int w, Rng& rng, double scale = 1.0) {
    TensorT<S> t(c, h, w);
    for (auto& v : t.v) v = static_cast<S>(scale * rng.normal());
    return t;
}

DenoiserArch tiny_arch() {
    DenoiserArch a;
    a.width1 = 2;
    a.width2 = 2;
    a.width3 = 2;
    a.temb_dim = 2;
    return a;
}

} // namespace

TEST_CASE("zero-initialized fusion: condition has no effect at initialization") {
    Rng rng(3);
    Denoiser net(DenoiserArch{}, rng);
    Rng data_rng(4);
    const Tensor x = random_tensor<float>(3, 16, 16, data_rng);
    const Tensor cond_a = random_tensor<float>(3, 16, 16, data_rng);
    const Tensor cond_b = random_tensor<float>(3, 16, 16, data_rng);
    const Tensor ya = net.forward(x, 500, cond_a);
    const Tensor yb = net.forward(x, 500, cond_b);
    CHECK(ya.v == yb.v);
}

TEST_CASE("denoiser forward is deterministic and shape-preserving") {
    Rng rng(5);
    Denoiser net(DenoiserArch{}, rng);
    randomize_params(net.params(), rng, 0.05);
    Rng data_rng(6);
    const Tensor x = random_tensor<float>(3, 16, 16, data_rng);
    const Tensor cond = random_tensor<float>(3, 16, 16, data_rng);
    const Tensor y1 = net.forward(x, 250, cond);
    const Tensor y2 = net.forward(x, 250, cond);
    CHECK(y1.v == y2.v);
    CHECK(y1.c == x.c);
    CHECK(y1.h == x.h);
    CHECK(y1.w == x.w);
}

TEST_CASE("denoiser input validation") {
    Rng rng(7);
    Denoiser net(DenoiserArch{}, rng);
    Rng data_rng(8);
    const Tensor x = random_tensor<float>(3, 16, 16, data_rng);
    const Tensor cond_small = random_tensor<float>(3, 8, 8, data_rng);
    CHECK_THROWS_AS(net.forward(x, 500, cond_small), std::invalid_argument);
    const Tensor cond = random_tensor<float>(3, 16, 16, data_rng);
    CHECK_THROWS_AS(net.forward(x, 0, cond), std::out_of_range);
    CHECK_THROWS_AS(net.forward(x, 1001, cond), std::out_of_range);
    CHECK_THROWS_AS(net.forward(x, 500, cond, 3), std::invalid_argument); // labels not configured
}

TEST_CASE("default student stays under the 2e6 parameter bound") {
    Rng rng(9);
    Denoiser net(DenoiserArch{}, rng);
    const std::size_t n = param_count(net.params());
    CHECK(n <= 2000000u);
    CHECK(n > 10000u); // sanity: it is a real network
}

TEST_CASE("eval counter counts forward passes") {
    Rng rng(10);
    Denoiser net(DenoiserArch{}, rng);
    Rng data_rng(11);
    const Tensor x = random_tensor<float>(3, 8, 8, data_rng);
    const Tensor cond = random_tensor<float>(3, 8, 8, data_rng);
    const std::uint64_t before = net.eval_count.load();
    net.forward(x, 100, cond);
    net.forward(x, 200, cond);
    CHECK(net.eval_count.load() == before + 2);
}

TEST_CASE("denoiser gradient of mean-squared output (double, per-parameter FD)") {
    Rng rng(12);
    DenoiserT<double> net(tiny_arch(), rng);
    randomize_params(net.params(), rng, 0.2);
    CHECK(param_count(net.params()) <= 1100u);

    Rng data_rng(13);
    const TensorT<double> x = random_tensor<double>(3, 8, 8, data_rng);
    const TensorT<double> cond = random_tensor<double>(3, 8, 8, data_rng);
    const int s = 500;

    auto loss = [&]() {
        const TensorT<double> y = net.forward(x, s, cond);
        double acc = 0.0;
        for (double v : y.v) acc += v * v;
        return acc / static_cast<double>(y.v.size());
    };

    typename DenoiserT<double>::Ctx ctx;
    const TensorT<double> y = net.forward(x, s, cond, -1, ctx);
    TensorT<double> gy(y.c, y.h, y.w);
    for (std::size_t i = 0; i < y.v.size(); ++i)
        gy.v[i] = 2.0 * y.v[i] / static_cast<double>(y.v.size());
    GradsT<double> grads;
    grads.init(net.params());
    net.backward(ctx, gy, grads);

    const auto st = gradtest::check_all_params<double>(net.params(), grads, loss, 1e-3, 1e-3);
    CHECK(st.checked > 900);
    CHECK(st.failed == 0);
    INFO("worst relative error ", st.worst_rel);
    CHECK(st.worst_rel <= 1e-3);
}

TEST_CASE("denoiser gradient, float instantiation (directional FD)") {
    Rng rng(14);
    Denoiser net(tiny_arch(), rng);
    randomize_params(net.params(), rng, 0.2);
    Rng data_rng(15);
    const Tensor x = random_tensor<float>(3, 8, 8, data_rng);
    const Tensor cond = random_tensor<float>(3, 8, 8, data_rng);

    auto loss = [&]() {
        const Tensor y = net.forward(x, 300, cond);
        double acc = 0.0;
        for (float v : y.v) acc += static_cast<double>(v) * v;
        return acc / static_cast<double>(y.v.size());
    };

    typename Denoiser::Ctx ctx;
    const Tensor y = net.forward(x, 300, cond, -1, ctx);
    Tensor gy(y.c, y.h, y.w);
    for (std::size_t i = 0; i < y.v.size(); ++i)
        gy.v[i] = 2.0f * y.v[i] / static_cast<float>(y.v.size());
    GradsT<float> grads;
    grads.init(net.params());
    net.backward(ctx, gy, grads);

    Rng dir_rng(16);
    const double err = gradtest::directional_check<float>(net.params(), grads, loss, 1e-2, dir_rng);
    CHECK(err <= 1e-2);
}

TEST_CASE("class-label hook shifts the output only when configured") {
    DenoiserArch a = tiny_arch();
    a.num_classes = 3;
    Rng rng(17);
    Denoiser net(a, rng);
    randomize_params(net.params(), rng, 0.1);
    Rng data_rng(18);
    const Tensor x = random_tensor<float>(3, 8, 8, data_rng);
    const Tensor cond = random_tensor<float>(3, 8, 8, data_rng);
    const Tensor y_null = net.forward(x, 100, cond, -1);
    const Tensor y_l0 = net.forward(x, 100, cond, 0);
    const Tensor y_l1 = net.forward(x, 100, cond, 1);
    CHECK(y_null.v != y_l0.v);
    CHECK(y_l0.v != y_l1.v);
    CHECK_THROWS_AS(net.forward(x, 100, cond, 3), std::invalid_argument);
}

TEST_CASE("discriminator: determinism, validation, gradient check") {
    DiscriminatorArch da;
    da.width = 2;
    da.cond_width = 2;
    Rng rng(19);
    DiscriminatorT<double> disc(da, rng);
    randomize_params(disc.params(), rng, 0.2);

    Rng data_rng(20);
    const TensorT<double> img = random_tensor<double>(3, 16, 16, data_rng);
    const TensorT<double> cond = random_tensor<double>(3, 4, 4, data_rng);

    typename DiscriminatorT<double>::Ctx ctx;
    const double l1 = disc.forward(img, cond, ctx);
    typename DiscriminatorT<double>::Ctx ctx2;
    const double l2 = disc.forward(img, cond, ctx2);
    CHECK(l1 == l2);

    const TensorT<double> bad_cond = random_tensor<double>(3, 5, 5, data_rng);
    CHECK_THROWS_AS(disc.forward(img, bad_cond, ctx2), std::invalid_argument);

    // Gradient of the raw logit w.r.t. every parameter.
    auto loss = [&]() {
        typename DiscriminatorT<double>::Ctx c;
        return static_cast<double>(disc.forward(img, cond, c));
    };
    GradsT<double> grads;
    grads.init(disc.params());
    disc.backward(ctx, 1.0, grads);
    const auto st = gradtest::check_all_params<double>(disc.params(), grads, loss, 1e-3, 1e-3);
    CHECK(st.failed == 0);
    CHECK(st.worst_rel <= 1e-3);
}

TEST_CASE("discriminator input gradient matches finite differences") {
    DiscriminatorArch da;
    da.width = 2;
    da.cond_width = 2;
    Rng rng(21);
    DiscriminatorT<double> disc(da, rng);
    randomize_params(disc.params(), rng, 0.2);
    Rng data_rng(22);
    TensorT<double> img = random_tensor<double>(3, 8, 8, data_rng);
    const TensorT<double> cond = random_tensor<double>(3, 2, 2, data_rng);

    typename DiscriminatorT<double>::Ctx ctx;
    disc.forward(img, cond, ctx);
    GradsT<double> grads;
    grads.init(disc.params());
    TensorT<double> gimg;
    disc.backward(ctx, 1.0, grads, &gimg);

    Rng pick(23);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t j = static_cast<std::size_t>(pick.uniform_int(0, static_cast<int>(img.v.size()) - 1));
        const double saved = img.v[j];
        const double h = 1e-4;
        typename DiscriminatorT<double>::Ctx c;
        img.v[j] = saved + h;
        const double lp = disc.forward(img, cond, c);
        img.v[j] = saved - h;
        const double lm = disc.forward(img, cond, c);
        img.v[j] = saved;
        const double fd = (lp - lm) / (2.0 * h);
        CHECK(gradtest::rel_err(fd, gimg.v[j]) <= 1e-4);
    }
}

TEST_CASE("discriminator separates a 2-class toy set after hinge training") {
    DiscriminatorArch da;
    da.width = 4;
    da.cond_width = 4;
    Rng rng(24);
    Discriminator disc(da, rng);

    // Real: smooth dark images. Fake: bright high-variance noise.
    Rng data_rng(25);
    auto make_real = [&](Rng& r) {
        Tensor t(3, 16, 16);
        const float base = static_cast<float>(r.uniform(-0.8, -0.4));
        for (auto& v : t.v) v = base + static_cast<float>(0.05 * r.normal());
        return t;
    };
    auto make_fake = [&](Rng& r) {
        Tensor t(3, 16, 16);
        for (auto& v : t.v) v = static_cast<float>(0.5 + 0.5 * r.normal());
        return t;
    };
    const Tensor cond(3, 4, 4);

    AdamT<float> opt;
    opt.lr = 2e-3;
    opt.init(disc.params());
    for (int step = 0; step < 200; ++step) {
        GradsT<float> grads;
        grads.init(disc.params());
        const Tensor real = make_real(data_rng);
        const Tensor fake = make_fake(data_rng);
        typename Discriminator::Ctx rc, fc;
        const float lr_logit = disc.forward(real, cond, rc);
        const float lf_logit = disc.forward(fake, cond, fc);
        if (1.0f - lr_logit > 0.0f) disc.backward(rc, -1.0f, grads);
        if (1.0f + lf_logit > 0.0f) disc.backward(fc, 1.0f, grads);
        ParamRefs<float> ps = disc.params();
        opt.step(ps, grads);
    }

    double mean_real = 0.0, mean_fake = 0.0;
    const int n_eval = 32;
    for (int i = 0; i < n_eval; ++i) {
        typename Discriminator::Ctx c;
        mean_real += disc.forward(make_real(data_rng), cond, c);
        mean_fake += disc.forward(make_fake(data_rng), cond, c);
    }
    mean_real /= n_eval;
    mean_fake /= n_eval;
    CHECK(mean_real > mean_fake);
}

TEST_CASE("parameter checksum is stable and order-sensitive") {
    Rng rng(26);
    Denoiser a(DenoiserArch{}, rng);
    const std::uint32_t c1 = params_crc32(a.params());
    const std::uint32_t c2 = params_crc32(a.params());
    CHECK(c1 == c2);
    Denoiser b = a;
    CHECK(params_crc32(b.params()) == c1);
    b.stem.w.w[0] += 1e-3f;
    CHECK(params_crc32(b.params()) != c1);
}
