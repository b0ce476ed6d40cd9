#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "addsr/codec.hpp"
#include "addsr/image.hpp"
#include "addsr/imageops.hpp"

namespace addsr {

struct BlurStage {
    double sigma = 2.0;
    int ksize = 21;
};

struct ResizeStage {
    double scale = 0.25;
    ResizeKernel kernel = ResizeKernel::Bicubic;
};

struct NoiseStage {
    double sigma = 20.0; // on the 0..255 intensity scale
};

struct JpegStage {
    int quality = 50;
};

using Stage = std::variant<BlurStage, ResizeStage, NoiseStage, JpegStage>;

// Ordered blur/resize/noise/JPEG stages plus a seed; synthesizes the LR image
// from an HR image. Identical (pipeline, seed, input) gives identical output,
// with the JPEG stage reproducible under the pinned codec.
struct DegradationPipeline {
    std::vector<Stage> stages;
    std::uint64_t seed = 0;

    double total_scale() const;
    DegradationPipeline with_seed(std::uint64_t s) const {
        DegradationPipeline p = *this;
        p.seed = s;
        return p;
    }
};

ImageU8 apply_pipeline(const ImageU8& hr, const DegradationPipeline& pipe);

// Sampling ranges for the randomized training pipeline.
struct DegradationRanges {
    double blur_sigma_lo = 0.2, blur_sigma_hi = 3.0;
    double noise_sigma_lo = 1.0, noise_sigma_hi = 30.0;
    int jpeg_q_lo = 30, jpeg_q_hi = 95;
    std::vector<ResizeKernel> kernels = {ResizeKernel::Bicubic, ResizeKernel::Bilinear, ResizeKernel::Area};
    double scale = 0.25;
    int order = 1; // 2 applies two sampled passes
    int blur_ksize = 21;
};

DegradationPipeline random_training_pipeline(std::uint64_t rng_seed, const DegradationRanges& cfg);

// The four fixed test pipelines: sr4, blur2_sr4, sr4_noise40,
// blur2_sr4_noise20_jpeg50.
DegradationPipeline fixed_pipeline(const std::string& name, std::uint64_t seed = 0);
std::vector<std::string> fixed_pipeline_names();

nlohmann::json pipeline_to_json(const DegradationPipeline& pipe);
DegradationPipeline pipeline_from_json(const nlohmann::json& j);

} // namespace addsr
