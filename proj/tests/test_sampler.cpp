#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "addsr/sampler.hpp"

using namespace addsr;

namespace {

Tensor random_lr(int h, int w, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t(3, h, w);
    for (auto& v : t.v) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
}

} // namespace

TEST_CASE("blend_condition: endpoints bit-exact, midpoint arithmetic, range check") {
    const Tensor a = random_lr(4, 4, 1);
    const Tensor b = random_lr(4, 4, 2);
    CHECK(blend_condition(a, b, 1.0).v == a.v);
    CHECK(blend_condition(a, b, 0.0).v == b.v);

    Tensor x(1, 1, 1), y(1, 1, 1);
    x.v[0] = 0.8f;
    y.v[0] = 0.2f;
    CHECK(blend_condition(x, y, 0.5).v[0] == doctest::Approx(0.5).epsilon(1e-7));

    CHECK_THROWS_AS(blend_condition(a, b, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(blend_condition(a, b, 1.1), std::invalid_argument);
    Tensor c(3, 2, 2);
    CHECK_THROWS_AS(blend_condition(a, c, 0.5), std::invalid_argument);
}

TEST_CASE("psr_sample: evaluation count equals steps; conditions are the chain elements") {
    const NoiseSchedule sched = build_schedule(1000, 1e-4, 0.02);
    const StudentTimestepSet sts = default_student_timesteps();
    const Tensor x_lr = random_lr(4, 4, 3);

    for (int steps = 1; steps <= 4; ++steps) {
        int evals = 0;
        std::vector<Tensor> seen_conds;
        std::vector<int> seen_s;
        EpsFn eps = [&](const Tensor& x, int s, const Tensor& cond) {
            ++evals;
            seen_conds.push_back(cond);
            seen_s.push_back(s);
            Tensor out(x.c, x.h, x.w);
            for (std::size_t i = 0; i < x.v.size(); ++i) out.v[i] = 0.5f * x.v[i];
            return out;
        };
        Rng rng(100 + steps);
        auto [out, chain] = psr_sample(eps, x_lr, steps, 1.0, sts, sched, rng);
        CHECK(evals == steps);
        CHECK(chain.produced_for == steps);
        CHECK(static_cast<int>(chain.elements.size()) == steps);
        CHECK(out.h == 16);
        CHECK(out.w == 16);

        // Step k ran at anchor k.
        for (int k = 1; k <= steps; ++k) CHECK(seen_s[k - 1] == sts.anchor_for_step(k));

        // Chain element 1 is the LR image; with blend_r=1 the condition
        // consumed at step k>=2 is exactly chain element k.
        CHECK(chain.element(1).v == x_lr.v);
        const Tensor x_lr_up = resize_chw(x_lr, 16, 16, ResizeKernel::Bicubic);
        CHECK(seen_conds[0].v == x_lr_up.v);
        for (int k = 2; k <= steps; ++k) CHECK(seen_conds[k - 1].v == chain.element(k).v);
    }
}

TEST_CASE("psr_sample: fixed seed gives bit-identical output") {
    const NoiseSchedule sched = build_schedule(1000, 1e-4, 0.02);
    const StudentTimestepSet sts = default_student_timesteps();
    const Tensor x_lr = random_lr(4, 4, 4);
    Rng arch_rng(5);
    DenoiserArch arch;
    arch.width1 = 4;
    arch.width2 = 4;
    arch.width3 = 4;
    arch.temb_dim = 8;
    Denoiser net(arch, arch_rng);
    randomize_params(net.params(), arch_rng, 0.05);

    Rng r1(77), r2(77), r3(78);
    const auto a = psr_sample(net, x_lr, 4, 1.0, sts, sched, r1);
    const auto b = psr_sample(net, x_lr, 4, 1.0, sts, sched, r2);
    const auto c = psr_sample(net, x_lr, 4, 1.0, sts, sched, r3);
    CHECK(a.first.v == b.first.v);
    CHECK(a.first.v != c.first.v);
    for (std::size_t i = 0; i < a.second.elements.size(); ++i)
        CHECK(a.second.elements[i].v == b.second.elements[i].v);
}

TEST_CASE("psr_sample: injected true-noise oracle reproduces the predict_x0 algebra") {
    const NoiseSchedule sched = build_schedule(1000, 1e-4, 0.02);
    const StudentTimestepSet sts = default_student_timesteps();
    const Tensor x_lr = random_lr(4, 4, 6);

    // At step 1 the state is pure noise; an oracle returning the state itself
    // returns its true noise content.
    EpsFn oracle = [](const Tensor& x, int, const Tensor&) { return x; };
    Rng rng(99);
    auto [out, chain] = psr_sample(oracle, x_lr, 2, 1.0, sts, sched, rng);

    // Recompute independently with the same stream.
    Rng rng2(99);
    Tensor x1(3, 16, 16);
    fill_normal(x1, rng2);
    const Tensor expected_x01 = predict_x0(x1, sts.anchor_for_step(1), x1, sched);
    CHECK(chain.element(2).v == expected_x01.v);
}

TEST_CASE("psr_sample: argument validation") {
    const NoiseSchedule sched = build_schedule(1000, 1e-4, 0.02);
    const StudentTimestepSet sts = default_student_timesteps();
    const Tensor x_lr = random_lr(4, 4, 7);
    EpsFn eps = [](const Tensor& x, int, const Tensor&) { return x; };
    Rng rng(1);
    CHECK_THROWS_AS(psr_sample(eps, x_lr, 0, 1.0, sts, sched, rng), std::invalid_argument);
    CHECK_THROWS_AS(psr_sample(eps, x_lr, 5, 1.0, sts, sched, rng), std::invalid_argument);
    CHECK_THROWS_AS(psr_sample(eps, x_lr, 2, 1.5, sts, sched, rng), std::invalid_argument);
}

TEST_CASE("baseline_sample: steps=1 equals a single predict_x0 at the terminal timestep") {
    const NoiseSchedule sched = build_schedule(1000, 1e-4, 0.02);
    const Tensor x_lr = random_lr(4, 4, 8);
    EpsFn eps = [](const Tensor& x, int, const Tensor&) {
        Tensor out(x.c, x.h, x.w);
        for (std::size_t i = 0; i < x.v.size(); ++i) out.v[i] = 0.3f * x.v[i];
        return out;
    };
    Rng rng(55);
    const Tensor out = baseline_sample(eps, x_lr, 1, sched, rng);

    Rng rng2(55);
    Tensor x(3, 16, 16);
    fill_normal(x, rng2);
    Tensor eps_hat(3, 16, 16);
    for (std::size_t i = 0; i < x.v.size(); ++i) eps_hat.v[i] = 0.3f * x.v[i];
    Tensor expected = predict_x0(x, 1000, eps_hat, sched);
    for (auto& v : expected.v) v = std::min(1.0f, std::max(-1.0f, v));
    CHECK(out.v == expected.v);
}

TEST_CASE("baseline_sample: deterministic under a fixed seed") {
    const NoiseSchedule sched = build_schedule(1000, 1e-4, 0.02);
    const Tensor x_lr = random_lr(4, 4, 9);
    EpsFn eps = [](const Tensor& x, int, const Tensor&) {
        Tensor out(x.c, x.h, x.w);
        for (std::size_t i = 0; i < x.v.size(); ++i) out.v[i] = 0.9f * x.v[i];
        return out;
    };
    Rng r1(42), r2(42);
    CHECK(baseline_sample(eps, x_lr, 10, sched, r1).v == baseline_sample(eps, x_lr, 10, sched, r2).v);
}

TEST_CASE("baseline_sample: perfect denoiser on a delta distribution returns the delta image") {
    const NoiseSchedule sched = build_schedule(1000, 1e-4, 0.02);
    Tensor target(3, 16, 16);
    for (std::size_t i = 0; i < target.v.size(); ++i)
        target.v[i] = 0.25f * static_cast<float>(std::sin(0.37 * static_cast<double>(i)));

    // Oracle: the exact noise under the hypothesis x0 == target.
    EpsFn oracle = [&](const Tensor& x, int s, const Tensor&) {
        const double a = std::sqrt(sched.alpha_bar(s));
        const double b = std::sqrt(1.0 - sched.alpha_bar(s));
        Tensor out(x.c, x.h, x.w);
        for (std::size_t i = 0; i < x.v.size(); ++i)
            out.v[i] = static_cast<float>((x.v[i] - a * target.v[i]) / b);
        return out;
    };

    const Tensor x_lr = random_lr(4, 4, 10);
    for (int steps : {1, 5, 50}) {
        Rng rng(1000 + steps);
        const Tensor out = baseline_sample(oracle, x_lr, steps, sched, rng);
        double max_dev = 0.0;
        for (std::size_t i = 0; i < out.v.size(); ++i)
            max_dev = std::max(max_dev, std::abs(static_cast<double>(out.v[i]) - target.v[i]));
        CHECK(max_dev <= 1e-2);
    }
    Rng bad_rng(1);
    CHECK_THROWS_AS(baseline_sample(oracle, x_lr, 0, sched, bad_rng), std::invalid_argument);
}

TEST_CASE("denoiser-backed sampling counts evaluations on the net") {
    const NoiseSchedule sched = build_schedule(1000, 1e-4, 0.02);
    const StudentTimestepSet sts = default_student_timesteps();
    const Tensor x_lr = random_lr(4, 4, 11);
    Rng arch_rng(12);
    DenoiserArch arch;
    arch.width1 = 4;
    arch.width2 = 4;
    arch.width3 = 4;
    arch.temb_dim = 8;
    Denoiser net(arch, arch_rng);

    net.eval_count.store(0);
    Rng rng(13);
    psr_sample(net, x_lr, 3, 1.0, sts, sched, rng);
    CHECK(net.eval_count.load() == 3);
    baseline_sample(net, x_lr, 50, sched, rng);
    CHECK(net.eval_count.load() == 53);
}
