#include "addsr/sampler.hpp"

#include <cmath>

namespace addsr {

Tensor blend_condition(const Tensor& x0_hat, const Tensor& x_lr_up, double r) {
    require(x0_hat.same_shape(x_lr_up), "blend_condition: shape mismatch");
    require(r >= 0.0 && r <= 1.0, "blend_condition: ratio outside [0,1]");
    if (r == 0.0) return x_lr_up;
    if (r == 1.0) return x0_hat;
    Tensor out(x0_hat.c, x0_hat.h, x0_hat.w);
    const float rf = static_cast<float>(r);
    for (std::size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = rf * x0_hat.v[i] + (1.0f - rf) * x_lr_up.v[i];
    return out;
}

std::pair<Tensor, ConditionChain> psr_sample(const EpsFn& eps, const Tensor& x_lr, int steps,
                                             double blend_r, const StudentTimestepSet& sts,
                                             const NoiseSchedule& sched, Rng& rng, int scale) {
    require(steps >= 1 && steps <= sts.num_steps(), "psr_sample: steps outside 1..|anchors|");
    require(blend_r >= 0.0 && blend_r <= 1.0, "psr_sample: blend ratio outside [0,1]");
    const int hr_h = x_lr.h * scale, hr_w = x_lr.w * scale;
    const Tensor x_lr_up = resize_chw(x_lr, hr_h, hr_w, ResizeKernel::Bicubic); // cached once

    ConditionChain chain;
    chain.elements = {x_lr};
    chain.produced_for = steps;

    Tensor prev;
    for (int k = 1; k <= steps; ++k) {
        const int s_k = sts.anchor_for_step(k);
        Tensor x, cond;
        if (k == 1) {
            x = Tensor(3, hr_h, hr_w);
            fill_normal(x, rng);
            cond = x_lr_up;
        } else {
            x = forward_diffuse(prev, s_k, randn_like(prev, rng), sched);
            cond = blend_condition(prev, x_lr_up, blend_r);
        }
        const Tensor eps_hat = eps(x, s_k, cond);
        prev = predict_x0(x, s_k, eps_hat, sched);
        if (k < steps) chain.elements.push_back(prev);
    }
    return {std::move(prev), std::move(chain)};
}

std::pair<Tensor, ConditionChain> psr_sample(const Denoiser& net, const Tensor& x_lr, int steps,
                                             double blend_r, const StudentTimestepSet& sts,
                                             const NoiseSchedule& sched, Rng& rng, int scale) {
    return psr_sample(eps_fn(net), x_lr, steps, blend_r, sts, sched, rng, scale);
}

Tensor baseline_sample(const EpsFn& eps, const Tensor& x_lr, int steps, const NoiseSchedule& sched,
                       Rng& rng, int scale) {
    require(steps >= 1, "baseline_sample: steps must be >= 1");
    const int hr_h = x_lr.h * scale, hr_w = x_lr.w * scale;
    const Tensor x_lr_up = resize_chw(x_lr, hr_h, hr_w, ResizeKernel::Bicubic);

    std::vector<int> taus(steps);
    for (int i = 1; i <= steps; ++i)
        taus[i - 1] = std::max(1, static_cast<int>(std::lround(static_cast<double>(sched.T) * i / steps)));

    Tensor x(3, hr_h, hr_w);
    fill_normal(x, rng);
    for (int i = steps; i >= 1; --i) {
        const int s = taus[i - 1];
        const int prev_s = (i > 1) ? taus[i - 2] : 0;
        const Tensor eps_hat = eps(x, s, x_lr_up);
        Tensor x0 = predict_x0(x, s, eps_hat, sched);
        for (auto& v : x0.v) v = std::min(1.0f, std::max(-1.0f, v));
        if (prev_s == 0) {
            x = std::move(x0);
            break;
        }
        const double abar_c = sched.alpha_bar(s);
        const double abar_p = sched.alpha_bar(prev_s);
        const double sigma2 =
            std::max(0.0, (1.0 - abar_p) / (1.0 - abar_c) * (1.0 - abar_c / abar_p));
        const double dir = std::sqrt(std::max(0.0, 1.0 - abar_p - sigma2));
        const double a_c = std::sqrt(abar_c), b_c = std::sqrt(1.0 - abar_c);
        const double a_p = std::sqrt(abar_p), sig = std::sqrt(sigma2);
        Tensor next(3, hr_h, hr_w);
        for (std::size_t j = 0; j < next.v.size(); ++j) {
            const double eps_implied = (static_cast<double>(x.v[j]) - a_c * x0.v[j]) / b_c;
            next.v[j] = static_cast<float>(a_p * x0.v[j] + dir * eps_implied + sig * rng.normal());
        }
        x = std::move(next);
    }
    return x;
}

Tensor baseline_sample(const Denoiser& net, const Tensor& x_lr, int steps, const NoiseSchedule& sched,
                       Rng& rng, int scale) {
    return baseline_sample(eps_fn(net), x_lr, steps, sched, rng, scale);
}

} // namespace addsr
