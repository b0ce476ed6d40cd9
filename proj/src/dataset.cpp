#include "addsr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "addsr/codec.hpp"
#include "addsr/rng.hpp"

namespace addsr {

namespace {

constexpr double kTwoPi = 6.283185307179586;

// Random per-channel affine colorization of a scalar field in [0,1].
ImageU8 colorize(const std::vector<double>& field, int size, Rng& rng) {
    ImageU8 img(size, size);
    double lo[3], hi[3];
    for (int c = 0; c < 3; ++c) {
        lo[c] = rng.uniform(0.0, 110.0);
        hi[c] = rng.uniform(145.0, 255.0);
    }
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double v = field[static_cast<std::size_t>(y) * size + x];
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = clamp_u8(lo[c] + (hi[c] - lo[c]) * v);
        }
    return img;
}

std::vector<double> grating_field(int size, Rng& rng) {
    const double cycles = rng.uniform(0.8, 3.2);
    const double theta = rng.uniform(0.0, kTwoPi);
    const double fx = cycles * std::cos(theta) / size;
    const double fy = cycles * std::sin(theta) / size;
    const double phase = rng.uniform(0.0, kTwoPi);
    std::vector<double> f(static_cast<std::size_t>(size) * size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            f[static_cast<std::size_t>(y) * size + x] =
                0.5 + 0.5 * std::sin(kTwoPi * (fx * x + fy * y) + phase);
    return f;
}

std::vector<double> checker_field(int size, Rng& rng) {
    // Periods stay at or above 2 LR pixels after x4 downscaling.
    const int periods[] = {8, 16, 32};
    const int period = periods[rng.uniform_int(0, size >= 64 ? 2 : 1)];
    const int ox = rng.uniform_int(0, period - 1);
    const int oy = rng.uniform_int(0, period - 1);
    std::vector<double> f(static_cast<std::size_t>(size) * size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            f[static_cast<std::size_t>(y) * size + x] =
                (((x + ox) / period + (y + oy) / period) % 2 == 0) ? 0.0 : 1.0;
    return f;
}

// Two octaves of bilinear value noise.
std::vector<double> value_noise_field(int size, Rng& rng) {
    std::vector<double> f(static_cast<std::size_t>(size) * size, 0.0);
    double weight = 0.65;
    for (int octave = 0; octave < 2; ++octave) {
        const int res = (octave == 0) ? 3 : 6;
        std::vector<double> grid(static_cast<std::size_t>(res + 1) * (res + 1));
        for (auto& g : grid) g = rng.uniform();
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const double gy = static_cast<double>(y) * res / size;
                const double gx = static_cast<double>(x) * res / size;
                const int iy = static_cast<int>(gy), ix = static_cast<int>(gx);
                const double ty = gy - iy, tx = gx - ix;
                const double v00 = grid[static_cast<std::size_t>(iy) * (res + 1) + ix];
                const double v01 = grid[static_cast<std::size_t>(iy) * (res + 1) + ix + 1];
                const double v10 = grid[static_cast<std::size_t>(iy + 1) * (res + 1) + ix];
                const double v11 = grid[static_cast<std::size_t>(iy + 1) * (res + 1) + ix + 1];
                f[static_cast<std::size_t>(y) * size + x] +=
                    weight * ((1 - ty) * ((1 - tx) * v00 + tx * v01) + ty * ((1 - tx) * v10 + tx * v11));
            }
        weight = 1.0 - weight;
    }
    return f;
}

} // namespace

std::vector<ImageU8> make_procedural_textures(int count, int size, std::uint64_t seed) {
    require(count > 0 && size >= 8, "make_procedural_textures: bad count or size");
    std::vector<ImageU8> out;
    out.reserve(static_cast<std::size_t>(count));
    const Rng base(seed);
    for (int i = 0; i < count; ++i) {
        Rng rng = base.fork(static_cast<std::uint64_t>(i));
        std::vector<double> field;
        switch (i % 3) {
            case 0: field = grating_field(size, rng); break;
            case 1: field = checker_field(size, rng); break;
            default: field = value_noise_field(size, rng); break;
        }
        out.push_back(colorize(field, size, rng));
    }
    return out;
}

std::vector<ImageU8> load_folder_images(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ConfigError("dataset: not a directory: " + dir);
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    std::vector<ImageU8> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(load_image(p.string()));
    if (out.empty()) throw ConfigError("dataset: no images found in " + dir);
    return out;
}

std::vector<TrainPair> build_pairs(const std::vector<ImageU8>& images, const PairSetConfig& cfg) {
    require(!images.empty(), "build_pairs: empty image set");
    require(cfg.patch % cfg.scale == 0, "build_pairs: patch size must be divisible by scale");
    const Rng base(cfg.seed);
    std::vector<TrainPair> pairs;
    pairs.reserve(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        const ImageU8& src = images[i];
        require(src.h >= cfg.patch && src.w >= cfg.patch, "build_pairs: image smaller than patch");
        Rng rng = base.fork(i);

        ImageU8 hr(cfg.patch, cfg.patch);
        const int oy = (src.h == cfg.patch) ? 0 : rng.uniform_int(0, src.h - cfg.patch);
        const int ox = (src.w == cfg.patch) ? 0 : rng.uniform_int(0, src.w - cfg.patch);
        for (int y = 0; y < cfg.patch; ++y)
            for (int x = 0; x < cfg.patch; ++x)
                for (int c = 0; c < 3; ++c) hr.at(y, x, c) = src.at(oy + y, ox + x, c);

        DegradationPipeline pipe = (cfg.pipeline == "random")
                                       ? random_training_pipeline(rng.next_u64(), cfg.ranges)
                                       : fixed_pipeline(cfg.pipeline, rng.next_u64());
        // Fixed pipelines keep their per-image derived seed for noise stages.
        const ImageU8 lr = apply_pipeline(hr, pipe);

        TrainPair p;
        p.x0 = unit_from_u8(hr);
        p.x_lr = unit_from_u8(lr);
        p.hr_u8 = std::move(hr);
        p.lr_u8 = lr;
        pairs.push_back(std::move(p));
    }
    return pairs;
}

} // namespace addsr
