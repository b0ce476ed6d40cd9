#pragma once

#include <string>

#include <json.hpp>

#include "addsr/dataset.hpp"
#include "addsr/harness.hpp"

namespace addsr {

// Run configuration: a JSON file with sections mirroring the module types.
// Every CLI flag overrides its config key.
struct RunConfig {
    // schedule
    int T = 1000;
    double beta_start = 1e-4, beta_end = 0.02;
    std::vector<int> anchors = {999, 749, 499, 249};

    DenoiserArch arch;
    DiscriminatorArch disc;
    WeightingParams wp;

    // optimizer
    double lr = 2e-5; // paper setting
    double lr_disc = 2e-5;
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;

    // trainer
    int batch = 4;
    int distill_steps = 2000;
    std::string teacher_cond = "hr"; // or "lr" (ablation arm)
    std::uint64_t seed = 1;

    // dataset
    std::string data_mode = "procedural"; // or "folder"
    std::string data_path;
    int texture_count = 128;
    int texture_size = 64;
    int patch = 64;
    int scale = 4;
    std::string pipeline = "sr4"; // fixed pipeline name or "random"
    DegradationRanges ranges;
    std::uint64_t deg_seed = 7;

    // teacher pretraining
    int pretrain_steps = 2000;
    int pretrain_batch = 8;
    double pretrain_lr = 1e-3;

    // inference
    int infer_steps = 4;
    double blend_r = 1.0;
    std::uint64_t infer_seed = 0;
    std::uint64_t eval_seed = 99;

    void validate() const;

    NoiseSchedule make_schedule() const { return build_schedule(T, beta_start, beta_end); }
    StudentTimestepSet make_timesteps() const { return make_student_timesteps(anchors, T); }
    TrainerConfig make_trainer_config() const;
    PairSetConfig make_pair_config() const;
    PretrainConfig make_pretrain_config() const;
    DenoiserArch make_arch() const;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
};

RunConfig load_run_config(const std::string& path); // empty path -> defaults

} // namespace addsr
