#include "addsr/config.hpp"

#include <fstream>

namespace addsr {

void RunConfig::validate() const {
    try {
        make_schedule();
        make_timesteps();
        wp.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (teacher_cond != "hr" && teacher_cond != "lr")
        throw ConfigError("config: teacher_cond must be 'hr' or 'lr'");
    if (data_mode != "procedural" && data_mode != "folder")
        throw ConfigError("config: data_mode must be 'procedural' or 'folder'");
    if (data_mode == "folder" && data_path.empty())
        throw ConfigError("config: folder data_mode needs data_path");
    if (batch < 1 || distill_steps < 0 || pretrain_steps < 0 || pretrain_batch < 1)
        throw ConfigError("config: non-positive batch or step count");
    if (patch % scale != 0 || patch % 4 != 0)
        throw ConfigError("config: patch must be divisible by scale and by 4");
    if (infer_steps < 1 || infer_steps > static_cast<int>(anchors.size()))
        throw ConfigError("config: infer_steps outside 1..|anchors|");
    if (blend_r < 0.0 || blend_r > 1.0) throw ConfigError("config: blend_r outside [0,1]");
    if (pipeline != "random") {
        const auto names = fixed_pipeline_names();
        if (std::find(names.begin(), names.end(), pipeline) == names.end())
            throw ConfigError("config: unknown pipeline '" + pipeline + "'");
    }
}

TrainerConfig RunConfig::make_trainer_config() const {
    TrainerConfig t;
    t.batch = batch;
    t.lr = lr;
    t.lr_disc = lr_disc;
    t.adam_beta1 = adam_beta1;
    t.adam_beta2 = adam_beta2;
    t.adam_eps = adam_eps;
    t.teacher_cond = (teacher_cond == "hr") ? TeacherCond::HR : TeacherCond::LR;
    t.scale = scale;
    return t;
}

PairSetConfig RunConfig::make_pair_config() const {
    PairSetConfig p;
    p.patch = patch;
    p.scale = scale;
    p.pipeline = pipeline;
    p.ranges = ranges;
    p.seed = deg_seed;
    return p;
}

PretrainConfig RunConfig::make_pretrain_config() const {
    PretrainConfig p;
    p.steps = pretrain_steps;
    p.batch = pretrain_batch;
    p.lr = pretrain_lr;
    p.scale = scale;
    p.seed = seed;
    return p;
}

DenoiserArch RunConfig::make_arch() const {
    DenoiserArch a = arch;
    a.max_timestep = T;
    return a;
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["schedule"] = {{"T", T}, {"beta_start", beta_start}, {"beta_end", beta_end}};
    j["anchors"] = anchors;
    j["arch"] = denoiser_arch_to_json(arch);
    j["disc"] = {{"width", disc.width}, {"cond_width", disc.cond_width}, {"scale", disc.scale}};
    j["weighting"] = weighting_to_json(wp);
    j["optimizer"] = {{"lr", lr},       {"lr_disc", lr_disc}, {"beta1", adam_beta1},
                      {"beta2", adam_beta2}, {"eps", adam_eps}};
    j["trainer"] = {{"batch", batch},
                    {"steps", distill_steps},
                    {"teacher_cond", teacher_cond},
                    {"seed", seed}};
    j["dataset"] = {{"mode", data_mode},       {"path", data_path},
                    {"texture_count", texture_count}, {"texture_size", texture_size},
                    {"patch", patch},           {"scale", scale},
                    {"pipeline", pipeline},     {"deg_seed", deg_seed},
                    {"deg_order", ranges.order},
                    {"blur_sigma", {ranges.blur_sigma_lo, ranges.blur_sigma_hi}},
                    {"noise_sigma", {ranges.noise_sigma_lo, ranges.noise_sigma_hi}},
                    {"jpeg_q", {ranges.jpeg_q_lo, ranges.jpeg_q_hi}}};
    j["pretrain"] = {{"steps", pretrain_steps}, {"batch", pretrain_batch}, {"lr", pretrain_lr}};
    j["infer"] = {{"steps", infer_steps}, {"blend_r", blend_r}, {"seed", infer_seed},
                  {"eval_seed", eval_seed}};
    return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    if (j.contains("schedule")) {
        const auto& s = j["schedule"];
        c.T = s.value("T", c.T);
        c.beta_start = s.value("beta_start", c.beta_start);
        c.beta_end = s.value("beta_end", c.beta_end);
    }
    if (j.contains("anchors")) c.anchors = j["anchors"].get<std::vector<int>>();
    if (j.contains("arch")) {
        const auto& a = j["arch"];
        c.arch.width1 = a.value("width1", c.arch.width1);
        c.arch.width2 = a.value("width2", c.arch.width2);
        c.arch.width3 = a.value("width3", c.arch.width3);
        c.arch.temb_dim = a.value("temb_dim", c.arch.temb_dim);
        c.arch.num_classes = a.value("num_classes", c.arch.num_classes);
    }
    if (j.contains("disc")) {
        const auto& d = j["disc"];
        c.disc.width = d.value("width", c.disc.width);
        c.disc.cond_width = d.value("cond_width", c.disc.cond_width);
        c.disc.scale = d.value("scale", c.disc.scale);
    }
    if (j.contains("weighting")) {
        const auto& w = j["weighting"];
        if (w.contains("preset")) c.wp = WeightingParams::preset(w["preset"]);
        if (w.contains("form")) c.wp.form = weighting_form_from_string(w["form"]);
        c.wp.mu = w.value("mu", c.wp.mu);
        c.wp.nu = w.value("nu", c.wp.nu);
        c.wp.gamma = w.value("gamma", c.wp.gamma);
        c.wp.kappa = w.value("kappa", c.wp.kappa);
        c.wp.lambda = w.value("lambda", c.wp.lambda);
    }
    if (j.contains("optimizer")) {
        const auto& o = j["optimizer"];
        c.lr = o.value("lr", c.lr);
        c.lr_disc = o.value("lr_disc", c.lr_disc);
        c.adam_beta1 = o.value("beta1", c.adam_beta1);
        c.adam_beta2 = o.value("beta2", c.adam_beta2);
        c.adam_eps = o.value("eps", c.adam_eps);
    }
    if (j.contains("trainer")) {
        const auto& t = j["trainer"];
        c.batch = t.value("batch", c.batch);
        c.distill_steps = t.value("steps", c.distill_steps);
        c.teacher_cond = t.value("teacher_cond", c.teacher_cond);
        c.seed = t.value("seed", c.seed);
    }
    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        c.data_mode = d.value("mode", c.data_mode);
        c.data_path = d.value("path", c.data_path);
        c.texture_count = d.value("texture_count", c.texture_count);
        c.texture_size = d.value("texture_size", c.texture_size);
        c.patch = d.value("patch", c.patch);
        c.scale = d.value("scale", c.scale);
        c.pipeline = d.value("pipeline", c.pipeline);
        c.deg_seed = d.value("deg_seed", c.deg_seed);
        c.ranges.order = d.value("deg_order", c.ranges.order);
        if (d.contains("blur_sigma")) {
            c.ranges.blur_sigma_lo = d["blur_sigma"][0];
            c.ranges.blur_sigma_hi = d["blur_sigma"][1];
        }
        if (d.contains("noise_sigma")) {
            c.ranges.noise_sigma_lo = d["noise_sigma"][0];
            c.ranges.noise_sigma_hi = d["noise_sigma"][1];
        }
        if (d.contains("jpeg_q")) {
            c.ranges.jpeg_q_lo = d["jpeg_q"][0];
            c.ranges.jpeg_q_hi = d["jpeg_q"][1];
        }
    }
    if (j.contains("pretrain")) {
        const auto& p = j["pretrain"];
        c.pretrain_steps = p.value("steps", c.pretrain_steps);
        c.pretrain_batch = p.value("batch", c.pretrain_batch);
        c.pretrain_lr = p.value("lr", c.pretrain_lr);
    }
    if (j.contains("infer")) {
        const auto& i = j["infer"];
        c.infer_steps = i.value("steps", c.infer_steps);
        c.blend_r = i.value("blend_r", c.blend_r);
        c.infer_seed = i.value("seed", c.infer_seed);
        c.eval_seed = i.value("eval_seed", c.eval_seed);
    }
    return c;
}

RunConfig load_run_config(const std::string& path) {
    if (path.empty()) return RunConfig{};
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: parse error in " + path + ": " + e.what());
    }
    try {
        return RunConfig::from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: bad value in " + path + ": " + e.what());
    }
}

} // namespace addsr
