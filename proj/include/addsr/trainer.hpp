#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "addsr/objective.hpp"
#include "addsr/parallel.hpp"
#include "addsr/sampler.hpp"

namespace addsr {

// ---------------------------------------------------------------------------
// Generator pass shared between training and the gradient suite. The teacher
// estimate enters as a constant target: that is the objective the optimizer
// sees, and what finite differences must be taken against.
// ---------------------------------------------------------------------------

template <typename S>
struct GenPass {
    typename DenoiserT<S>::Ctx ctx;
    TensorT<S> x_s;
    TensorT<S> x0_hat;
    double alpha_bar = 0.0;
};

template <typename S>
GenPass<S> gen_forward(const DenoiserT<S>& student, const TensorT<S>& x_s, int s,
                       const TensorT<S>& cond_hr, double alpha_bar_s) {
    GenPass<S> pass;
    pass.x_s = x_s;
    pass.alpha_bar = alpha_bar_s;
    const TensorT<S> eps_hat = student.forward(x_s, s, cond_hr, -1, pass.ctx);
    pass.x0_hat = predict_x0_coeff(x_s, alpha_bar_s, eps_hat);
    return pass;
}

struct GenLosses {
    double dis = 0.0, g_adv = 0.0, total = 0.0;
};

// Computes dis + lambda*g_adv for one sample and, when student_grads is
// given, accumulates d(total)/d(student params) scaled by grad_scale.
// The discriminator is evaluated but never written to.
template <typename S>
GenLosses gen_loss_and_grad(const DenoiserT<S>& student, const GenPass<S>& pass,
                            const TensorT<S>& teacher_x0, DiscriminatorT<S>& disc,
                            const TensorT<S>& x_lr, double d_weight, const WeightingParams& wp,
                            GradsT<S>* student_grads, double grad_scale = 1.0) {
    GenLosses out;
    out.dis = ta_distill_loss(pass.x0_hat, teacher_x0, d_weight);

    typename DiscriminatorT<S>::Ctx dctx;
    const S fake_logit = disc.forward(pass.x0_hat, x_lr, dctx);
    out.g_adv = -static_cast<double>(fake_logit);
    out.total = total_loss(out.dis, out.g_adv, wp);

    if (!student_grads) return out;

    const std::size_t n = pass.x0_hat.v.size();
    TensorT<S> gx0(pass.x0_hat.c, pass.x0_hat.h, pass.x0_hat.w);
    const double mse_coeff = grad_scale * d_weight * 2.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        gx0.v[i] = static_cast<S>(mse_coeff *
                                  (static_cast<double>(pass.x0_hat.v[i]) - teacher_x0.v[i]));

    if (wp.lambda > 0.0) {
        GradsT<S> scratch;
        scratch.init(disc.params());
        TensorT<S> gimg;
        disc.backward(dctx, static_cast<S>(-wp.lambda * grad_scale), scratch, &gimg, nullptr);
        add_inplace(gx0, gimg);
    }

    // x0_hat = (x_s - sqrt(1-abar)*eps_hat)/sqrt(abar)
    const double deps = -std::sqrt(1.0 - pass.alpha_bar) / std::sqrt(pass.alpha_bar);
    TensorT<S> geps(gx0.c, gx0.h, gx0.w);
    for (std::size_t i = 0; i < n; ++i) geps.v[i] = static_cast<S>(deps * gx0.v[i]);
    student.backward(pass.ctx, geps, *student_grads);
    return out;
}

// Hinge discriminator loss on (real, fake) conditioned on the LR image;
// accumulates disc gradients when disc_grads is given. The fake image is a
// constant input here (no gradient reaches the student).
template <typename S>
double disc_hinge_and_grad(DiscriminatorT<S>& disc, const TensorT<S>& real_img,
                           const TensorT<S>& fake_img, const TensorT<S>& x_lr,
                           GradsT<S>* disc_grads, double grad_scale = 1.0) {
    typename DiscriminatorT<S>::Ctx rctx, fctx;
    const double logit_real = static_cast<double>(disc.forward(real_img, x_lr, rctx));
    const double logit_fake = static_cast<double>(disc.forward(fake_img, x_lr, fctx));
    if (!std::isfinite(logit_real) || !std::isfinite(logit_fake))
        throw NumericError("discriminator produced a non-finite logit");
    const AdvLosses l = adversarial_losses(logit_real, logit_fake);
    if (disc_grads) {
        if (1.0 - logit_real > 0.0)
            disc.backward(rctx, static_cast<S>(-grad_scale), *disc_grads, nullptr, nullptr);
        if (1.0 + logit_fake > 0.0)
            disc.backward(fctx, static_cast<S>(grad_scale), *disc_grads, nullptr, nullptr);
    }
    return l.d_loss;
}

// ---------------------------------------------------------------------------
// Condition chain
// ---------------------------------------------------------------------------

// Conditions for inference step k come from the same PSR code path used at
// inference: [x_LR] for k=1, otherwise the psr_sample chain of k-1 steps plus
// its final prediction. Forward-only; gradients never flow through the chain.
ConditionChain build_condition_chain(const Denoiser& student, const Tensor& x_lr, int k,
                                     const StudentTimestepSet& sts, const NoiseSchedule& sched,
                                     Rng& rng, int scale = 4);

// ---------------------------------------------------------------------------
// Training state and steps
// ---------------------------------------------------------------------------

enum class TeacherCond { HR, LR };

struct TrainerConfig {
    int batch = 4;
    double lr = 2e-5; // paper setting; toy runs override in config
    double lr_disc = 2e-5;
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
    TeacherCond teacher_cond = TeacherCond::HR;
    int scale = 4;
};

struct TrainState {
    Denoiser student;
    Denoiser teacher; // frozen
    Discriminator disc;
    AdamT<float> opt_g, opt_d;
    std::uint64_t step = 0;
    std::uint64_t seed = 0;
    NoiseSchedule sched;
    StudentTimestepSet sts;
};

// Student is initialized from the teacher.
TrainState make_train_state(const Denoiser& teacher, const DiscriminatorArch& disc_arch,
                            const NoiseSchedule& sched, const StudentTimestepSet& sts,
                            const TrainerConfig& cfg, std::uint64_t seed);

struct Batch {
    std::vector<Tensor> x0;   // HR images in [-1,1]
    std::vector<Tensor> x_lr; // LR images in [-1,1]
};

struct LossReport {
    double dis = 0.0;
    double g_adv = 0.0;
    double d_loss = 0.0;
    double ratio_sample = 0.0; // lambda / d(s,t) of the first batch element
};

// One TA-ADD distillation step: per batch element, sample a student anchor s,
// build the condition chain, predict x0_hat, re-noise it to a uniformly
// sampled teacher timestep t, form the HR-conditioned teacher target, then
// update the student with d(s,t)*MSE + lambda*g_adv and the discriminator
// with the hinge loss on (x0, x0_hat).
LossReport distill_step(TrainState& state, const Batch& batch, const WeightingParams& wp,
                        const TrainerConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// Teacher pretraining (noise-prediction objective, LR-conditioned)
// ---------------------------------------------------------------------------

struct PretrainConfig {
    int steps = 2000;
    int batch = 8;
    double lr = 1e-3;
    int scale = 4;
    std::uint64_t seed = 1;
    int log_every = 0; // 0 disables stdout progress
};

// One step of E||eps - eps_psi(x_s, s, cond=up(x_lr))||^2 on a batch;
// returns the batch loss.
double teacher_pretrain_step(Denoiser& teacher, AdamT<float>& opt, const Batch& batch,
                             const NoiseSchedule& sched, int scale, Rng& rng);

// Full pretraining loop over (x0, x_lr) pairs.
Denoiser pretrain_teacher(const std::vector<std::pair<Tensor, Tensor>>& pairs,
                          const DenoiserArch& arch, const NoiseSchedule& sched,
                          const PretrainConfig& cfg);

} // namespace addsr
