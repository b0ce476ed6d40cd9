#pragma once

#include <string>

#include <json.hpp>

#include "addsr/trainer.hpp"

namespace addsr {

// Self-describing binary archive: magic, version, a JSON metadata record
// (schedule, anchors, architectures, weighting, step count, array manifest),
// then the named float32 arrays in manifest order, each CRC32-checked.
// Save followed by load is bit-exact.

struct TeacherCheckpoint {
    Denoiser net;
    NoiseSchedule sched;
    StudentTimestepSet sts;
};

void save_denoiser(const std::string& path, Denoiser& net, const NoiseSchedule& sched,
                   const StudentTimestepSet& sts);
TeacherCheckpoint load_denoiser(const std::string& path);

struct TrainCheckpoint {
    TrainState state;
    WeightingParams wp;
};

void save_train_state(const std::string& path, TrainState& state, const WeightingParams& wp);
TrainCheckpoint load_train_state(const std::string& path);

// Raw metadata record, for guards and manifests.
nlohmann::json read_checkpoint_meta(const std::string& path);

// Throws ConfigError when the checkpoint was written under a different
// schedule than the run expects.
void verify_checkpoint_schedule(const nlohmann::json& meta, const NoiseSchedule& expected);

nlohmann::json schedule_to_json(const NoiseSchedule& sched);
NoiseSchedule schedule_from_json(const nlohmann::json& j);
nlohmann::json weighting_to_json(const WeightingParams& wp);
WeightingParams weighting_from_json(const nlohmann::json& j);
nlohmann::json denoiser_arch_to_json(const DenoiserArch& a);
DenoiserArch denoiser_arch_from_json(const nlohmann::json& j);

} // namespace addsr
