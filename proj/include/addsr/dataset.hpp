#pragma once

#include <string>
#include <utility>
#include <vector>

#include "addsr/degradation.hpp"
#include "addsr/image.hpp"

namespace addsr {

// Procedural texture corpus: sinusoid gratings, checkerboards, and value
// noise with random colorization. Deterministic per seed, no downloads.
std::vector<ImageU8> make_procedural_textures(int count, int size, std::uint64_t seed);

// Flat folder of PNG/JPEG images.
std::vector<ImageU8> load_folder_images(const std::string& dir);

struct PairSetConfig {
    int patch = 64;               // HR patch size
    int scale = 4;                // LR = patch / scale
    std::string pipeline = "sr4"; // fixed pipeline name, or "random"
    DegradationRanges ranges;     // used when pipeline == "random"
    std::uint64_t seed = 7;       // degradation/crop seed
};

struct TrainPair {
    Tensor x0;        // HR in [-1,1]
    Tensor x_lr;      // LR in [-1,1]
    ImageU8 hr_u8;    // HR ground truth for metric evaluation
    ImageU8 lr_u8;
};

// Random-crops each source image to the HR patch size and synthesizes the LR
// side through the degradation pipeline with a per-image derived seed.
std::vector<TrainPair> build_pairs(const std::vector<ImageU8>& images, const PairSetConfig& cfg);

} // namespace addsr
