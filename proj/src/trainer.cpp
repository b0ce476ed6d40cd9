#include "addsr/trainer.hpp"

#include <cmath>
#include <cstdio>

namespace addsr {

ConditionChain build_condition_chain(const Denoiser& student, const Tensor& x_lr, int k,
                                     const StudentTimestepSet& sts, const NoiseSchedule& sched,
                                     Rng& rng, int scale) {
    require(k >= 1 && k <= sts.num_steps(), "build_condition_chain: k outside 1..|anchors|");
    if (k == 1) {
        ConditionChain chain;
        chain.elements = {x_lr};
        chain.produced_for = 1;
        return chain;
    }
    auto [final_x0, chain] = psr_sample(student, x_lr, k - 1, 1.0, sts, sched, rng, scale);
    chain.elements.push_back(std::move(final_x0));
    chain.produced_for = k;
    return chain;
}

TrainState make_train_state(const Denoiser& teacher, const DiscriminatorArch& disc_arch,
                            const NoiseSchedule& sched, const StudentTimestepSet& sts,
                            const TrainerConfig& cfg, std::uint64_t seed) {
    TrainState st;
    st.teacher = teacher;
    st.student = teacher; // student initialized from the teacher
    Rng rng(seed ^ 0xd15c0000u);
    st.disc = Discriminator(disc_arch, rng);
    st.opt_g.lr = cfg.lr;
    st.opt_g.beta1 = cfg.adam_beta1;
    st.opt_g.beta2 = cfg.adam_beta2;
    st.opt_g.eps = cfg.adam_eps;
    st.opt_d = st.opt_g;
    st.opt_d.lr = cfg.lr_disc;
    st.opt_g.init(st.student.params());
    st.opt_d.init(st.disc.params());
    st.step = 0;
    st.seed = seed;
    st.sched = sched;
    st.sts = sts;
    return st;
}

LossReport distill_step(TrainState& state, const Batch& batch, const WeightingParams& wp,
                        const TrainerConfig& cfg, Rng& rng) {
    const int B = static_cast<int>(batch.x0.size());
    require(B > 0 && batch.x_lr.size() == batch.x0.size(), "distill_step: empty or ragged batch");
    wp.validate();

    // Per-element seeds drawn sequentially so threading cannot reorder RNG use.
    std::vector<std::uint64_t> seeds(B);
    for (auto& s : seeds) s = rng.next_u64();

    struct ElementOut {
        GradsT<float> gg, gd;
        double dis = 0, g_adv = 0, d_loss = 0, d_weight = 0;
    };
    std::vector<ElementOut> outs(B);

    const Tensor* x0s = batch.x0.data();
    const Tensor* xlrs = batch.x_lr.data();
    TrainState* st = &state;
    const TrainerConfig* pcfg = &cfg;
    const WeightingParams* pwp = &wp;

    parallel_for(B, [&, st, pcfg, pwp](int i) {
        Rng r(seeds[static_cast<std::size_t>(i)]);
        const Tensor& x0 = x0s[i];
        const Tensor& x_lr = xlrs[i];
        ElementOut& out = outs[static_cast<std::size_t>(i)];
        out.gg.init(st->student.params());
        out.gd.init(st->disc.params());

        // 1. student anchor, condition chain, condition for step k
        const int a_idx = r.uniform_int(0, st->sts.num_steps() - 1);
        const int s = st->sts.anchors[static_cast<std::size_t>(a_idx)];
        const int k = project_step(s, st->sts);
        ConditionChain chain = build_condition_chain(st->student, x_lr, k, st->sts, st->sched, r,
                                                     pcfg->scale);
        const Tensor cond_hr =
            (k == 1) ? resize_chw(x_lr, x_lr.h * pcfg->scale, x_lr.w * pcfg->scale, ResizeKernel::Bicubic)
                     : chain.element(k);

        // 2. student prediction at s
        const Tensor eps = randn_like(x0, r);
        const Tensor x_s = forward_diffuse(x0, s, eps, st->sched);
        GenPass<float> pass = gen_forward(st->student, x_s, s, cond_hr, st->sched.alpha_bar(s));

        // 3. teacher target at a uniform t, conditioned on x0 (or LR in the
        //    ablation arm), gradient-isolated
        const int t = r.uniform_int(1, st->sched.T);
        const Tensor eps2 = randn_like(pass.x0_hat, r);
        const Tensor x_t = forward_diffuse(pass.x0_hat, t, eps2, st->sched);
        const Tensor teacher_cond =
            (pcfg->teacher_cond == TeacherCond::HR)
                ? x0
                : resize_chw(x_lr, x_lr.h * pcfg->scale, x_lr.w * pcfg->scale, ResizeKernel::Bicubic);
        const Tensor teacher_x0 =
            predict_x0(x_t, t, st->teacher.forward(x_t, t, teacher_cond), st->sched);

        // 4. generator loss and gradients
        out.d_weight = weight_d(s, t, st->sched, st->sts, *pwp);
        const GenLosses gl = gen_loss_and_grad(st->student, pass, teacher_x0, st->disc, x_lr,
                                               out.d_weight, *pwp, &out.gg, 1.0);
        out.dis = gl.dis;
        out.g_adv = gl.g_adv;

        // 5. discriminator hinge on (real=x0, fake=x0_hat), both conditioned on x_lr
        out.d_loss = disc_hinge_and_grad(st->disc, x0, pass.x0_hat, x_lr, &out.gd, 1.0);
    });

    GradsT<float> gg, gd;
    gg.init(state.student.params());
    gd.init(state.disc.params());
    LossReport rep;
    const double inv_b = 1.0 / static_cast<double>(B);
    for (int i = 0; i < B; ++i) {
        gg.accumulate(outs[static_cast<std::size_t>(i)].gg, inv_b);
        gd.accumulate(outs[static_cast<std::size_t>(i)].gd, inv_b);
        rep.dis += outs[static_cast<std::size_t>(i)].dis * inv_b;
        rep.g_adv += outs[static_cast<std::size_t>(i)].g_adv * inv_b;
        rep.d_loss += outs[static_cast<std::size_t>(i)].d_loss * inv_b;
    }
    rep.ratio_sample = wp.lambda / outs[0].d_weight;

    if (!std::isfinite(rep.dis) || !std::isfinite(rep.g_adv) || !std::isfinite(rep.d_loss))
        throw NumericError("distill_step: non-finite loss at step " + std::to_string(state.step) +
                           " (dis=" + std::to_string(rep.dis) + ", g_adv=" + std::to_string(rep.g_adv) +
                           ", d_loss=" + std::to_string(rep.d_loss) + ")");

    ParamRefs<float> sp = state.student.params();
    state.opt_g.step(sp, gg);
    ParamRefs<float> dp = state.disc.params();
    state.opt_d.step(dp, gd);
    ++state.step;
    return rep;
}

double teacher_pretrain_step(Denoiser& teacher, AdamT<float>& opt, const Batch& batch,
                             const NoiseSchedule& sched, int scale, Rng& rng) {
    const int B = static_cast<int>(batch.x0.size());
    require(B > 0 && batch.x_lr.size() == batch.x0.size(),
            "teacher_pretrain_step: empty or ragged batch");

    std::vector<std::uint64_t> seeds(B);
    for (auto& s : seeds) s = rng.next_u64();

    struct ElementOut {
        GradsT<float> g;
        double loss = 0;
    };
    std::vector<ElementOut> outs(B);
    Denoiser* net = &teacher;

    parallel_for(B, [&, net](int i) {
        Rng r(seeds[static_cast<std::size_t>(i)]);
        ElementOut& out = outs[static_cast<std::size_t>(i)];
        out.g.init(net->params());
        const Tensor& x0 = batch.x0[static_cast<std::size_t>(i)];
        const Tensor& x_lr = batch.x_lr[static_cast<std::size_t>(i)];
        const Tensor cond = resize_chw(x_lr, x_lr.h * scale, x_lr.w * scale, ResizeKernel::Bicubic);
        const int s = r.uniform_int(1, sched.T);
        const Tensor eps = randn_like(x0, r);
        const Tensor x_s = forward_diffuse(x0, s, eps, sched);
        typename Denoiser::Ctx ctx;
        const Tensor eps_hat = net->forward(x_s, s, cond, -1, ctx);
        out.loss = mean_squared_error(eps_hat, eps);
        Tensor geps(eps.c, eps.h, eps.w);
        const double c = 2.0 / static_cast<double>(eps.v.size());
        for (std::size_t j = 0; j < eps.v.size(); ++j)
            geps.v[j] = static_cast<float>(c * (static_cast<double>(eps_hat.v[j]) - eps.v[j]));
        net->backward(ctx, geps, out.g);
    });

    GradsT<float> g;
    g.init(teacher.params());
    double loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(B);
    for (int i = 0; i < B; ++i) {
        g.accumulate(outs[static_cast<std::size_t>(i)].g, inv_b);
        loss += outs[static_cast<std::size_t>(i)].loss * inv_b;
    }
    if (!std::isfinite(loss))
        throw NumericError("teacher_pretrain_step: non-finite loss");
    ParamRefs<float> ps = teacher.params();
    opt.step(ps, g);
    return loss;
}

Denoiser pretrain_teacher(const std::vector<std::pair<Tensor, Tensor>>& pairs,
                          const DenoiserArch& arch, const NoiseSchedule& sched,
                          const PretrainConfig& cfg) {
    require(!pairs.empty(), "pretrain_teacher: empty dataset");
    Rng init_rng(cfg.seed);
    Denoiser teacher(arch, init_rng);
    AdamT<float> opt;
    opt.lr = cfg.lr;
    opt.init(teacher.params());

    Rng rng(cfg.seed ^ 0x7ea0c4e1u);
    for (int step = 0; step < cfg.steps; ++step) {
        Batch batch;
        for (int b = 0; b < cfg.batch; ++b) {
            const int idx = rng.uniform_int(0, static_cast<int>(pairs.size()) - 1);
            batch.x0.push_back(pairs[static_cast<std::size_t>(idx)].first);
            batch.x_lr.push_back(pairs[static_cast<std::size_t>(idx)].second);
        }
        const double loss = teacher_pretrain_step(teacher, opt, batch, sched, cfg.scale, rng);
        if (cfg.log_every > 0 && (step + 1) % cfg.log_every == 0)
            std::printf("pretrain step %d/%d loss %.6f\n", step + 1, cfg.steps, loss);
    }
    return teacher;
}

} // namespace addsr
