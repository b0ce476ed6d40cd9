#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "addsr/checkpoint.hpp"
#include "addsr/dataset.hpp"
#include "addsr/metrics.hpp"

namespace addsr {

// ---------------------------------------------------------------------------
// Evaluation over pair sets
// ---------------------------------------------------------------------------

struct EvalStats {
    double psnr = 0.0, ssim = 0.0, hf = 0.0;
    int n = 0;
};

struct PerImageEval {
    std::string name;
    double psnr = 0.0, ssim = 0.0, hf = 0.0;
};

// PSR inference over every pair; metrics against the HR ground truth,
// averaged. Deterministic per (seed, pair index).
EvalStats eval_psr(const Denoiser& net, const std::vector<TrainPair>& pairs, int steps,
                   double blend_r, const StudentTimestepSet& sts, const NoiseSchedule& sched,
                   std::uint64_t seed, int scale = 4);

// Multi-step ancestral baseline evaluation (teacher reference).
EvalStats eval_baseline(const Denoiser& teacher, const std::vector<TrainPair>& pairs, int steps,
                        const NoiseSchedule& sched, std::uint64_t seed, int scale = 4);

// ---------------------------------------------------------------------------
// Training-run orchestration
// ---------------------------------------------------------------------------

struct DistillRunConfig {
    int steps = 1000;
    TrainerConfig trainer;
    WeightingParams wp;
    std::uint64_t seed = 1;
    std::string log_path;  // empty disables the CSV log
    int print_every = 0;   // 0 disables stdout progress
    double lr_final = -1;  // cosine decay to this rate; <0 keeps lr constant
};

// Runs `steps` distillation steps over batches sampled from `pairs`,
// appending one CSV row per step when a log path is set. Batch order is a
// pure function of the seed.
TrainState run_distill(const Denoiser& teacher, const DiscriminatorArch& disc_arch,
                       const std::vector<TrainPair>& pairs, const NoiseSchedule& sched,
                       const StudentTimestepSet& sts, const DistillRunConfig& cfg);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepRow {
    double value = 0.0;
    int steps = 0;
    double psnr = 0.0, ssim = 0.0, hf = 0.0;
};

struct SweepConfig {
    const Denoiser* teacher = nullptr;
    const std::vector<TrainPair>* train_pairs = nullptr;
    const std::vector<TrainPair>* eval_pairs = nullptr;
    NoiseSchedule sched;
    StudentTimestepSet sts;
    DiscriminatorArch disc_arch;
    WeightingParams base_wp;
    TrainerConfig trainer;
    int distill_steps = 500;
    std::uint64_t seed = 1;
    std::uint64_t eval_seed = 99;
};

// param is one of mu, nu, gamma, kappa, blend_r, steps. Hyper-parameter
// sweeps retrain per value and evaluate inference steps 1..4; inference-knob
// sweeps train once and vary the knob.
std::vector<SweepRow> run_sweep(const SweepConfig& cfg, const std::string& param,
                                const std::vector<double>& values);

void write_sweep_csv(const std::string& path, const std::string& param,
                     const std::vector<SweepRow>& rows);
void print_sweep_table(const std::string& param, const std::vector<SweepRow>& rows);

// ---------------------------------------------------------------------------
// Weighting-ratio figure
// ---------------------------------------------------------------------------

struct WeightingPlotData {
    std::vector<int> ts;                        // teacher-timestep grid
    std::vector<std::vector<double>> ratio;     // [p-1][ti], lambda/d(s,t)
    std::vector<double> baseline;               // [ti], constant-factor baseline
};

WeightingPlotData weighting_plot_data(const WeightingParams& wp, const NoiseSchedule& sched,
                                      const StudentTimestepSet& sts, int t_stride = 5);

// Writes <prefix>.csv and <prefix>.png; the CSV re-reads bit-exactly.
WeightingPlotData plot_weighting(const WeightingParams& wp, const NoiseSchedule& sched,
                                 const StudentTimestepSet& sts, const std::string& out_prefix);

WeightingPlotData read_weighting_csv(const std::string& path);

// ---------------------------------------------------------------------------
// Run manifests and eval CSVs
// ---------------------------------------------------------------------------

// manifest.json with the full config, its checksum, the seed, the pinned
// codec version, and the git head when available: enough to re-execute the
// run deterministically.
void write_run_manifest(const std::string& dir, const nlohmann::json& config, std::uint64_t seed);

void write_eval_csv(const std::string& path, const std::vector<PerImageEval>& rows);

// Append-only training log: step,dis_loss,g_adv,d_loss,ratio_sample.
class TrainLog {
public:
    explicit TrainLog(const std::string& path);
    ~TrainLog();
    TrainLog(const TrainLog&) = delete;
    TrainLog& operator=(const TrainLog&) = delete;
    void append(std::uint64_t step, const LossReport& rep);

private:
    std::FILE* f_ = nullptr;
};

} // namespace addsr
