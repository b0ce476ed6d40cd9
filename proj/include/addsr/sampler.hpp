#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "addsr/imageops.hpp"
#include "addsr/networks.hpp"
#include "addsr/schedule.hpp"

namespace addsr {

// Denoiser evaluation hook: (x_s, s, cond) -> predicted noise. Tests can
// inject oracles here; training and inference wrap a Denoiser.
using EpsFn = std::function<Tensor(const Tensor&, int, const Tensor&)>;

inline EpsFn eps_fn(const Denoiser& net, int label = -1) {
    return [&net, label](const Tensor& x, int s, const Tensor& cond) {
        return net.forward(x, s, cond, label);
    };
}

// The conditions consumed across inference steps: element 1 is x_LR at LR
// resolution, element i>1 is the HR prediction from step i-1. Only the prefix
// needed for `produced_for` steps is materialized.
struct ConditionChain {
    std::vector<Tensor> elements;
    int produced_for = 0;

    // 1-based access matching the inference-step index.
    const Tensor& element(int i) const {
        if (i < 1 || i > static_cast<int>(elements.size()))
            throw std::out_of_range("ConditionChain: element index out of range");
        return elements[static_cast<std::size_t>(i) - 1];
    }
};

// x_mix = r*x0_hat + (1-r)*x_lr_up; endpoints are returned bit-exactly.
Tensor blend_condition(const Tensor& x0_hat, const Tensor& x_lr_up, double r);

// Prediction-based self-refinement sampling in 1..4 steps. Step 1 denoises
// pure noise at the first anchor conditioned on the upsampled LR image; each
// later step re-noises the previous prediction to the next anchor with fresh
// noise and conditions on blend(prev, x_lr_up, blend_r). Exactly `steps`
// denoiser evaluations occur.
std::pair<Tensor, ConditionChain> psr_sample(const EpsFn& eps, const Tensor& x_lr, int steps,
                                             double blend_r, const StudentTimestepSet& sts,
                                             const NoiseSchedule& sched, Rng& rng, int scale = 4);

std::pair<Tensor, ConditionChain> psr_sample(const Denoiser& net, const Tensor& x_lr, int steps,
                                             double blend_r, const StudentTimestepSet& sts,
                                             const NoiseSchedule& sched, Rng& rng, int scale = 4);

// Multi-step ancestral baseline for the teacher: `steps` uniformly spaced
// timesteps, condition fixed to the upsampled LR image at every step.
Tensor baseline_sample(const EpsFn& eps, const Tensor& x_lr, int steps, const NoiseSchedule& sched,
                       Rng& rng, int scale = 4);

Tensor baseline_sample(const Denoiser& net, const Tensor& x_lr, int steps, const NoiseSchedule& sched,
                       Rng& rng, int scale = 4);

} // namespace addsr
