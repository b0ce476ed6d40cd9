#include "addsr/degradation.hpp"

#include <cmath>

#include "addsr/rng.hpp"

namespace addsr {

double DegradationPipeline::total_scale() const {
    double s = 1.0;
    for (const auto& st : stages)
        if (const auto* rs = std::get_if<ResizeStage>(&st)) s *= rs->scale;
    return s;
}

namespace {

void clamp255(Tensor& t) {
    for (auto& v : t.v) v = std::min(255.0f, std::max(0.0f, v));
}

void validate_stage(const Stage& st) {
    if (const auto* b = std::get_if<BlurStage>(&st)) {
        require(b->sigma > 0.0, "degradation: blur sigma must be positive");
        require(b->ksize >= 1 && b->ksize % 2 == 1, "degradation: blur kernel size must be odd");
    } else if (const auto* r = std::get_if<ResizeStage>(&st)) {
        require(r->scale > 0.0, "degradation: resize scale must be positive");
    } else if (const auto* n = std::get_if<NoiseStage>(&st)) {
        require(n->sigma >= 0.0, "degradation: noise sigma must be non-negative");
    } else if (const auto* j = std::get_if<JpegStage>(&st)) {
        require(j->quality >= 1 && j->quality <= 100, "degradation: jpeg quality outside [1,100]");
    }
}

} // namespace

ImageU8 apply_pipeline(const ImageU8& hr, const DegradationPipeline& pipe) {
    for (const auto& st : pipe.stages) validate_stage(st);
    Rng rng(pipe.seed);
    Tensor cur = tensor255_from_u8(hr);
    for (const auto& st : pipe.stages) {
        if (const auto* b = std::get_if<BlurStage>(&st)) {
            cur = gaussian_blur(cur, b->sigma, b->ksize);
        } else if (const auto* r = std::get_if<ResizeStage>(&st)) {
            const double oh = cur.h * r->scale;
            const double ow = cur.w * r->scale;
            if (std::abs(oh - std::round(oh)) > 1e-9 || std::abs(ow - std::round(ow)) > 1e-9)
                throw std::invalid_argument("apply_pipeline: image dimensions not divisible by resize scale");
            cur = resize_chw(cur, static_cast<int>(std::lround(oh)), static_cast<int>(std::lround(ow)), r->kernel);
        } else if (const auto* n = std::get_if<NoiseStage>(&st)) {
            clamp255(cur);
            for (auto& v : cur.v) v = static_cast<float>(v + n->sigma * rng.normal());
        } else if (const auto* j = std::get_if<JpegStage>(&st)) {
            cur = tensor255_from_u8(jpeg_roundtrip(u8_from_tensor255(cur), j->quality));
        }
    }
    return u8_from_tensor255(cur);
}

DegradationPipeline random_training_pipeline(std::uint64_t rng_seed, const DegradationRanges& cfg) {
    require(cfg.blur_sigma_lo > 0.0 && cfg.blur_sigma_lo <= cfg.blur_sigma_hi,
            "degradation ranges: invalid blur sigma range");
    require(cfg.noise_sigma_lo >= 0.0 && cfg.noise_sigma_lo <= cfg.noise_sigma_hi,
            "degradation ranges: invalid noise sigma range");
    require(cfg.jpeg_q_lo >= 1 && cfg.jpeg_q_hi <= 100 && cfg.jpeg_q_lo <= cfg.jpeg_q_hi,
            "degradation ranges: invalid jpeg quality range");
    require(!cfg.kernels.empty(), "degradation ranges: need at least one resize kernel");
    require(cfg.order == 1 || cfg.order == 2, "degradation ranges: order must be 1 or 2");
    require(cfg.scale > 0.0 && cfg.scale <= 1.0, "degradation ranges: scale outside (0,1]");

    Rng rng(rng_seed);
    DegradationPipeline pipe;
    pipe.seed = rng_seed;
    const double per_pass_scale = (cfg.order == 2) ? std::sqrt(cfg.scale) : cfg.scale;
    for (int pass = 0; pass < cfg.order; ++pass) {
        BlurStage blur;
        blur.sigma = rng.uniform(cfg.blur_sigma_lo, cfg.blur_sigma_hi);
        blur.ksize = cfg.blur_ksize;
        ResizeStage resize;
        resize.scale = per_pass_scale;
        resize.kernel = cfg.kernels[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(cfg.kernels.size()) - 1))];
        NoiseStage noise;
        noise.sigma = rng.uniform(cfg.noise_sigma_lo, cfg.noise_sigma_hi);
        JpegStage jpeg;
        jpeg.quality = rng.uniform_int(cfg.jpeg_q_lo, cfg.jpeg_q_hi);
        pipe.stages.push_back(blur);
        pipe.stages.push_back(resize);
        pipe.stages.push_back(noise);
        pipe.stages.push_back(jpeg);
    }
    return pipe;
}

DegradationPipeline fixed_pipeline(const std::string& name, std::uint64_t seed) {
    DegradationPipeline p;
    p.seed = seed;
    if (name == "sr4") {
        p.stages = {ResizeStage{0.25, ResizeKernel::Bicubic}};
    } else if (name == "blur2_sr4") {
        p.stages = {BlurStage{2.0, 21}, ResizeStage{0.25, ResizeKernel::Bicubic}};
    } else if (name == "sr4_noise40") {
        p.stages = {ResizeStage{0.25, ResizeKernel::Bicubic}, NoiseStage{40.0}};
    } else if (name == "blur2_sr4_noise20_jpeg50") {
        p.stages = {BlurStage{2.0, 21}, ResizeStage{0.25, ResizeKernel::Bicubic}, NoiseStage{20.0}, JpegStage{50}};
    } else {
        throw ConfigError("unknown fixed degradation pipeline: " + name);
    }
    return p;
}

std::vector<std::string> fixed_pipeline_names() {
    return {"sr4", "blur2_sr4", "sr4_noise40", "blur2_sr4_noise20_jpeg50"};
}

nlohmann::json pipeline_to_json(const DegradationPipeline& pipe) {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& st : pipe.stages) {
        if (const auto* b = std::get_if<BlurStage>(&st))
            stages.push_back({{"type", "blur"}, {"sigma", b->sigma}, {"ksize", b->ksize}});
        else if (const auto* r = std::get_if<ResizeStage>(&st))
            stages.push_back({{"type", "resize"}, {"scale", r->scale}, {"kernel", to_string(r->kernel)}});
        else if (const auto* n = std::get_if<NoiseStage>(&st))
            stages.push_back({{"type", "noise"}, {"sigma", n->sigma}});
        else if (const auto* j = std::get_if<JpegStage>(&st))
            stages.push_back({{"type", "jpeg"}, {"quality", j->quality}});
    }
    return {{"stages", stages}, {"seed", pipe.seed}};
}

DegradationPipeline pipeline_from_json(const nlohmann::json& j) {
    DegradationPipeline pipe;
    pipe.seed = j.value("seed", static_cast<std::uint64_t>(0));
    for (const auto& st : j.at("stages")) {
        const std::string type = st.at("type");
        if (type == "blur")
            pipe.stages.push_back(BlurStage{st.at("sigma").get<double>(), st.value("ksize", 21)});
        else if (type == "resize")
            pipe.stages.push_back(ResizeStage{st.at("scale").get<double>(),
                                              resize_kernel_from_string(st.at("kernel").get<std::string>())});
        else if (type == "noise")
            pipe.stages.push_back(NoiseStage{st.at("sigma").get<double>()});
        else if (type == "jpeg")
            pipe.stages.push_back(JpegStage{st.at("quality").get<int>()});
        else
            throw ConfigError("pipeline_from_json: unknown stage type " + type);
    }
    return pipe;
}

} // namespace addsr
