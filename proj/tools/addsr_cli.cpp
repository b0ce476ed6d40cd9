#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>

#include "addsr/config.hpp"

using namespace addsr;
namespace fs = std::filesystem;

namespace {

std::vector<TrainPair> make_dataset(const RunConfig& cfg, std::uint64_t seed_offset) {
    std::vector<ImageU8> images;
    if (cfg.data_mode == "procedural")
        images = make_procedural_textures(cfg.texture_count, std::max(cfg.texture_size, cfg.patch),
                                          cfg.deg_seed + seed_offset);
    else
        images = load_folder_images(cfg.data_path);
    PairSetConfig pc = cfg.make_pair_config();
    pc.seed = cfg.deg_seed + seed_offset;
    return build_pairs(images, pc);
}

std::vector<std::pair<Tensor, Tensor>> as_tensor_pairs(const std::vector<TrainPair>& pairs) {
    std::vector<std::pair<Tensor, Tensor>> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.emplace_back(p.x0, p.x_lr);
    return out;
}

Denoiser load_student_net(const std::string& path, NoiseSchedule& sched_out,
                          StudentTimestepSet& sts_out) {
    const nlohmann::json meta = read_checkpoint_meta(path);
    if (meta.at("kind") == "train_state") {
        TrainCheckpoint ck = load_train_state(path);
        sched_out = ck.state.sched;
        sts_out = ck.state.sts;
        return ck.state.student;
    }
    TeacherCheckpoint ck = load_denoiser(path);
    sched_out = ck.sched;
    sts_out = ck.sts;
    return ck.net;
}

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> vals;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        vals.push_back(std::stod(csv.substr(pos, next - pos)));
        pos = next + 1;
    }
    if (vals.empty()) throw ConfigError("sweep: empty value list");
    return vals;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"AddSR: few-step blind super-resolution via timestep-adaptive "
                 "adversarial diffusion distillation"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON run configuration")->expected(1);
    app.fallthrough();

    // ---- pretrain-teacher ----
    auto* pre = app.add_subcommand("pretrain-teacher", "Train the teacher denoiser");
    std::string pre_out = "teacher.ckpt";
    int pre_steps = -1, pre_batch = -1;
    double pre_lr = -1;
    std::uint64_t pre_seed = 0;
    bool pre_seed_set = false;
    pre->add_option("--out", pre_out, "output checkpoint path");
    pre->add_option("--steps", pre_steps, "pretraining steps");
    pre->add_option("--batch", pre_batch, "batch size");
    pre->add_option("--lr", pre_lr, "learning rate");
    pre->add_option("--seed", pre_seed, "seed")->each([&](const std::string&) { pre_seed_set = true; });
    pre->callback([&]() {
        RunConfig cfg = load_run_config(config_path);
        if (pre_steps >= 0) cfg.pretrain_steps = pre_steps;
        if (pre_batch >= 1) cfg.pretrain_batch = pre_batch;
        if (pre_lr > 0) cfg.pretrain_lr = pre_lr;
        if (pre_seed_set) cfg.seed = pre_seed;
        cfg.validate();
        const NoiseSchedule sched = cfg.make_schedule();
        const StudentTimestepSet sts = cfg.make_timesteps();
        const auto pairs = make_dataset(cfg, 0);
        PretrainConfig pc = cfg.make_pretrain_config();
        pc.log_every = std::max(1, pc.steps / 20);
        std::printf("pretraining teacher on %zu pairs (%d steps)\n", pairs.size(), pc.steps);
        Denoiser teacher = pretrain_teacher(as_tensor_pairs(pairs), cfg.make_arch(), sched, pc);
        save_denoiser(pre_out, teacher, sched, sts);
        const fs::path dir = fs::path(pre_out).has_parent_path() ? fs::path(pre_out).parent_path() : ".";
        write_run_manifest(dir.string(), cfg.to_json(), cfg.seed);
        std::printf("saved teacher to %s\n", pre_out.c_str());
    });

    // ---- distill ----
    auto* dis = app.add_subcommand("distill", "Distill the student with TA-ADD");
    std::string dis_teacher, dis_out = "student.ckpt", dis_log, dis_preset, dis_form, dis_cond;
    int dis_steps = -1, dis_batch = -1;
    double dis_lr = -1, dis_mu = -1, dis_nu = -1, dis_gamma = -1, dis_kappa = -1, dis_lambda = -1;
    std::uint64_t dis_seed = 0;
    bool dis_seed_set = false;
    dis->add_option("--teacher", dis_teacher, "teacher checkpoint")->required();
    dis->add_option("--out", dis_out, "output checkpoint path");
    dis->add_option("--log", dis_log, "training-log CSV path");
    dis->add_option("--steps", dis_steps, "distillation steps");
    dis->add_option("--batch", dis_batch, "batch size");
    dis->add_option("--lr", dis_lr, "learning rate");
    dis->add_option("--mu", dis_mu, "exponential-form mu");
    dis->add_option("--nu", dis_nu, "exponential-form nu");
    dis->add_option("--gamma", dis_gamma, "linear-form gamma");
    dis->add_option("--kappa", dis_kappa, "linear-form kappa");
    dis->add_option("--lambda", dis_lambda, "adversarial balance weight");
    dis->add_option("--form", dis_form, "weighting form: exponential|linear");
    dis->add_option("--preset", dis_preset, "weighting preset: perception|fidelity");
    dis->add_option("--teacher-cond", dis_cond, "teacher conditioning: hr|lr");
    dis->add_option("--seed", dis_seed, "seed")->each([&](const std::string&) { dis_seed_set = true; });
    dis->callback([&]() {
        RunConfig cfg = load_run_config(config_path);
        if (!dis_preset.empty()) cfg.wp = WeightingParams::preset(dis_preset);
        if (!dis_form.empty()) cfg.wp.form = weighting_form_from_string(dis_form);
        if (dis_mu > 0) cfg.wp.mu = dis_mu;
        if (dis_nu > 0) cfg.wp.nu = dis_nu;
        if (dis_gamma >= 0) cfg.wp.gamma = dis_gamma;
        if (dis_kappa >= 0) cfg.wp.kappa = dis_kappa;
        if (dis_lambda >= 0) cfg.wp.lambda = dis_lambda;
        if (dis_steps >= 0) cfg.distill_steps = dis_steps;
        if (dis_batch >= 1) cfg.batch = dis_batch;
        if (dis_lr > 0) cfg.lr = dis_lr;
        if (!dis_cond.empty()) cfg.teacher_cond = dis_cond;
        if (dis_seed_set) cfg.seed = dis_seed;
        cfg.validate();

        TeacherCheckpoint teacher = load_denoiser(dis_teacher);
        verify_checkpoint_schedule(read_checkpoint_meta(dis_teacher), cfg.make_schedule());

        const auto pairs = make_dataset(cfg, 0);
        DistillRunConfig rc;
        rc.steps = cfg.distill_steps;
        rc.trainer = cfg.make_trainer_config();
        rc.wp = cfg.wp;
        rc.seed = cfg.seed;
        rc.log_path = dis_log;
        rc.print_every = std::max(1, cfg.distill_steps / 20);
        std::printf("distilling for %d steps on %zu pairs\n", rc.steps, pairs.size());
        TrainState state = run_distill(teacher.net, cfg.disc, pairs, teacher.sched, teacher.sts, rc);
        save_train_state(dis_out, state, cfg.wp);
        const fs::path dir = fs::path(dis_out).has_parent_path() ? fs::path(dis_out).parent_path() : ".";
        write_run_manifest(dir.string(), cfg.to_json(), cfg.seed);
        std::printf("saved train state to %s\n", dis_out.c_str());
    });

    // ---- infer ----
    auto* inf = app.add_subcommand("infer", "PSR inference on a folder of LR images");
    std::string inf_ckpt, inf_in, inf_out;
    int inf_steps = -1;
    double inf_blend = -1;
    std::uint64_t inf_seed = 0;
    bool inf_seed_set = false, inf_dump_chain = false;
    inf->add_option("--ckpt", inf_ckpt, "student or teacher checkpoint")->required();
    inf->add_option("--in", inf_in, "input folder of LR images")->required();
    inf->add_option("--out", inf_out, "output folder")->required();
    inf->add_option("--steps", inf_steps, "inference steps (1..4)");
    inf->add_option("--blend-r", inf_blend, "PSR blending ratio in [0,1]");
    inf->add_option("--seed", inf_seed, "seed")->each([&](const std::string&) { inf_seed_set = true; });
    inf->add_flag("--dump-chain", inf_dump_chain, "also write the condition-chain elements");
    inf->callback([&]() {
        RunConfig cfg = load_run_config(config_path);
        if (inf_steps >= 1) cfg.infer_steps = inf_steps;
        if (inf_blend >= 0) cfg.blend_r = inf_blend;
        if (inf_seed_set) cfg.infer_seed = inf_seed;
        cfg.validate();

        NoiseSchedule sched;
        StudentTimestepSet sts;
        const Denoiser net = load_student_net(inf_ckpt, sched, sts);
        fs::create_directories(inf_out);

        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(inf_in))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw ConfigError("infer: no input images in " + inf_in);

        const Rng base(cfg.infer_seed);
        for (std::size_t i = 0; i < files.size(); ++i) {
            const ImageU8 lr = load_image(files[i].string());
            Rng rng = base.fork(i);
            auto [out, chain] = psr_sample(net, unit_from_u8(lr), cfg.infer_steps, cfg.blend_r, sts,
                                           sched, rng, cfg.scale);
            const std::string stem = files[i].stem().string();
            save_png(inf_out + "/" + stem + "_sr.png", u8_from_unit(out));
            if (inf_dump_chain)
                for (int k = 1; k <= static_cast<int>(chain.elements.size()); ++k)
                    save_png(inf_out + "/" + stem + "_cond" + std::to_string(k) + ".png",
                             u8_from_unit(chain.element(k)));
        }
        write_run_manifest(inf_out, cfg.to_json(), cfg.infer_seed);
        std::printf("restored %zu images to %s (%d steps, blend_r=%.2f)\n", files.size(),
                    inf_out.c_str(), cfg.infer_steps, cfg.blend_r);
    });

    // ---- degrade ----
    auto* deg = app.add_subcommand("degrade", "Synthesize LR images from HR inputs");
    std::string deg_in, deg_out, deg_pipeline;
    int deg_order = -1, deg_textures = 0;
    std::uint64_t deg_seed = 0;
    bool deg_seed_set = false;
    deg->add_option("--in", deg_in, "input folder of HR images");
    deg->add_option("--out", deg_out, "output folder")->required();
    deg->add_option("--pipeline", deg_pipeline, "fixed pipeline name or 'random'");
    deg->add_option("--order", deg_order, "random-pipeline order (1 or 2)");
    deg->add_option("--textures", deg_textures, "generate N procedural HR textures instead of --in");
    deg->add_option("--seed", deg_seed, "seed")->each([&](const std::string&) { deg_seed_set = true; });
    deg->callback([&]() {
        RunConfig cfg = load_run_config(config_path);
        if (!deg_pipeline.empty()) cfg.pipeline = deg_pipeline;
        if (deg_order >= 1) cfg.ranges.order = deg_order;
        if (deg_seed_set) cfg.deg_seed = deg_seed;
        cfg.validate();
        if (deg_in.empty() && deg_textures <= 0)
            throw ConfigError("degrade: need --in or --textures");

        std::vector<ImageU8> images;
        std::vector<std::string> names;
        if (deg_textures > 0) {
            images = make_procedural_textures(deg_textures, cfg.texture_size, cfg.deg_seed);
            for (int i = 0; i < deg_textures; ++i) names.push_back("texture" + std::to_string(i));
        } else {
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(deg_in))
                if (e.is_regular_file()) files.push_back(e.path());
            std::sort(files.begin(), files.end());
            for (const auto& p : files) {
                images.push_back(load_image(p.string()));
                names.push_back(p.stem().string());
            }
        }
        if (images.empty()) throw ConfigError("degrade: no input images");

        fs::create_directories(deg_out);
        const Rng base(cfg.deg_seed);
        nlohmann::json pipes = nlohmann::json::array();
        for (std::size_t i = 0; i < images.size(); ++i) {
            Rng rng = base.fork(i);
            DegradationPipeline pipe = (cfg.pipeline == "random")
                                           ? random_training_pipeline(rng.next_u64(), cfg.ranges)
                                           : fixed_pipeline(cfg.pipeline, rng.next_u64());
            const ImageU8 lr = apply_pipeline(images[i], pipe);
            if (deg_textures > 0) save_png(deg_out + "/" + names[i] + "_hr.png", images[i]);
            save_png(deg_out + "/" + names[i] + "_lr.png", lr);
            nlohmann::json rec = pipeline_to_json(pipe);
            rec["image"] = names[i];
            pipes.push_back(rec);
        }
        std::ofstream pf(deg_out + "/pipelines.json");
        pf << pipes.dump(2) << "\n";
        write_run_manifest(deg_out, cfg.to_json(), cfg.deg_seed);
        std::printf("degraded %zu images into %s\n", images.size(), deg_out.c_str());
    });

    // ---- eval ----
    auto* ev = app.add_subcommand("eval", "PSNR/SSIM/hf-energy of restored images vs references");
    std::string ev_ref, ev_outdir, ev_csv = "eval.csv";
    ev->add_option("--ref", ev_ref, "folder of reference HR images")->required();
    ev->add_option("--out", ev_outdir, "folder of restored images")->required();
    ev->add_option("--csv", ev_csv, "output CSV path");
    ev->callback([&]() {
        const std::vector<ImageU8> refs = load_folder_images(ev_ref);
        const std::vector<ImageU8> outs = load_folder_images(ev_outdir);
        if (refs.size() != outs.size())
            throw ConfigError("eval: reference and output folders differ in image count");
        std::vector<PerImageEval> rows;
        for (std::size_t i = 0; i < refs.size(); ++i) {
            PerImageEval r;
            r.name = "pair" + std::to_string(i);
            r.psnr = psnr(outs[i], refs[i]);
            r.ssim = ssim(outs[i], refs[i]);
            r.hf = hf_energy(outs[i]);
            rows.push_back(r);
        }
        write_eval_csv(ev_csv, rows);
        double mp = 0;
        for (const auto& r : rows) mp += r.psnr;
        std::printf("evaluated %zu pairs; mean psnr %.3f dB; wrote %s\n", rows.size(),
                    mp / static_cast<double>(rows.size()), ev_csv.c_str());
    });

    // ---- sweep ----
    auto* sw = app.add_subcommand("sweep", "Hyper-parameter or inference-knob sweep");
    std::string sw_param, sw_values, sw_teacher, sw_csv = "sweep.csv";
    int sw_steps = -1;
    sw->add_option("--param", sw_param, "mu|nu|gamma|kappa|blend_r|steps")->required();
    sw->add_option("--values", sw_values, "comma-separated values")->required();
    sw->add_option("--teacher", sw_teacher, "teacher checkpoint")->required();
    sw->add_option("--csv", sw_csv, "output CSV path");
    sw->add_option("--steps", sw_steps, "distillation steps per value");
    sw->callback([&]() {
        RunConfig cfg = load_run_config(config_path);
        if (sw_steps >= 0) cfg.distill_steps = sw_steps;
        cfg.validate();
        TeacherCheckpoint teacher = load_denoiser(sw_teacher);
        verify_checkpoint_schedule(read_checkpoint_meta(sw_teacher), cfg.make_schedule());

        const auto train_pairs = make_dataset(cfg, 0);
        const auto eval_pairs = make_dataset(cfg, 1000);
        SweepConfig sc;
        sc.teacher = &teacher.net;
        sc.train_pairs = &train_pairs;
        sc.eval_pairs = &eval_pairs;
        sc.sched = teacher.sched;
        sc.sts = teacher.sts;
        sc.disc_arch = cfg.disc;
        sc.base_wp = cfg.wp;
        sc.trainer = cfg.make_trainer_config();
        sc.distill_steps = cfg.distill_steps;
        sc.seed = cfg.seed;
        sc.eval_seed = cfg.eval_seed;
        const std::vector<SweepRow> rows = run_sweep(sc, sw_param, parse_values(sw_values));
        write_sweep_csv(sw_csv, sw_param, rows);
        print_sweep_table(sw_param, rows);
        std::printf("wrote %s\n", sw_csv.c_str());
    });

    // ---- plot-weighting ----
    auto* pl = app.add_subcommand("plot-weighting", "Weighting-ratio curves as CSV + PNG");
    std::string pl_out = "weighting";
    pl->add_option("--out", pl_out, "output prefix");
    pl->callback([&]() {
        RunConfig cfg = load_run_config(config_path);
        cfg.validate();
        plot_weighting(cfg.wp, cfg.make_schedule(), cfg.make_timesteps(), pl_out);
        std::printf("wrote %s.csv and %s.png\n", pl_out.c_str(), pl_out.c_str());
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") return app.exit(e);
        std::fprintf(stderr, "argument error: %s\n", e.what());
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::out_of_range& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
