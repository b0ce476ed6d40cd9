#include "addsr/imageops.hpp"

#include <algorithm>
#include <cmath>

namespace addsr {

ResizeKernel resize_kernel_from_string(const std::string& name) {
    if (name == "bicubic") return ResizeKernel::Bicubic;
    if (name == "bilinear") return ResizeKernel::Bilinear;
    if (name == "area") return ResizeKernel::Area;
    throw std::invalid_argument("unknown resize kernel: " + name);
}

std::string to_string(ResizeKernel k) {
    switch (k) {
        case ResizeKernel::Bicubic: return "bicubic";
        case ResizeKernel::Bilinear: return "bilinear";
        case ResizeKernel::Area: return "area";
    }
    return "?";
}

namespace {

// Keys cubic, a = -0.5.
double cubic_kernel(double x) {
    x = std::abs(x);
    if (x < 1.0) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
    if (x < 2.0) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
    return 0.0;
}

double linear_kernel(double x) {
    x = std::abs(x);
    return x < 1.0 ? 1.0 - x : 0.0;
}

double box_kernel(double x) { return std::abs(x) <= 0.5 ? 1.0 : 0.0; }

double kernel_support(ResizeKernel k) {
    switch (k) {
        case ResizeKernel::Bicubic: return 2.0;
        case ResizeKernel::Bilinear: return 1.0;
        case ResizeKernel::Area: return 0.5;
    }
    return 0.0;
}

double kernel_eval(ResizeKernel k, double x) {
    switch (k) {
        case ResizeKernel::Bicubic: return cubic_kernel(x);
        case ResizeKernel::Bilinear: return linear_kernel(x);
        case ResizeKernel::Area: return box_kernel(x);
    }
    return 0.0;
}

struct TapTable {
    std::vector<int> first;       // first source index per output index
    std::vector<double> weights;  // ntaps weights per output index
    int ntaps = 0;
};

TapTable make_taps(int in_n, int out_n, ResizeKernel k) {
    TapTable t;
    const double inv_scale = static_cast<double>(in_n) / out_n;
    const double stretch = std::max(1.0, inv_scale); // antialias when downscaling
    const double support = kernel_support(k) * stretch;
    t.ntaps = static_cast<int>(std::ceil(support * 2.0)) + 1;
    t.first.resize(out_n);
    t.weights.assign(static_cast<std::size_t>(out_n) * t.ntaps, 0.0);
    for (int o = 0; o < out_n; ++o) {
        const double center = (o + 0.5) * inv_scale - 0.5;
        int first = static_cast<int>(std::ceil(center - support));
        t.first[o] = first;
        double sum = 0.0;
        for (int j = 0; j < t.ntaps; ++j) {
            const double w = kernel_eval(k, (first + j - center) / stretch);
            t.weights[static_cast<std::size_t>(o) * t.ntaps + j] = w;
            sum += w;
        }
        if (sum != 0.0)
            for (int j = 0; j < t.ntaps; ++j)
                t.weights[static_cast<std::size_t>(o) * t.ntaps + j] /= sum;
    }
    return t;
}

inline int clamp_index(int i, int n) { return std::min(n - 1, std::max(0, i)); }

} // namespace

Tensor resize_chw(const Tensor& src, int out_h, int out_w, ResizeKernel kernel) {
    require(out_h >= 1 && out_w >= 1, "resize_chw: output dimensions must be positive");
    if (src.h == out_h && src.w == out_w) return src;

    const TapTable tx = make_taps(src.w, out_w, kernel);
    const TapTable ty = make_taps(src.h, out_h, kernel);

    // Horizontal pass.
    Tensor mid(src.c, src.h, out_w);
    for (int c = 0; c < src.c; ++c) {
        for (int y = 0; y < src.h; ++y) {
            const float* row = src.plane(c) + static_cast<std::size_t>(y) * src.w;
            float* out_row = mid.plane(c) + static_cast<std::size_t>(y) * out_w;
            for (int x = 0; x < out_w; ++x) {
                double acc = 0.0;
                const double* w = &tx.weights[static_cast<std::size_t>(x) * tx.ntaps];
                for (int j = 0; j < tx.ntaps; ++j)
                    acc += w[j] * row[clamp_index(tx.first[x] + j, src.w)];
                out_row[x] = static_cast<float>(acc);
            }
        }
    }

    // Vertical pass.
    Tensor out(src.c, out_h, out_w);
    for (int c = 0; c < src.c; ++c) {
        for (int y = 0; y < out_h; ++y) {
            const double* w = &ty.weights[static_cast<std::size_t>(y) * ty.ntaps];
            float* out_row = out.plane(c) + static_cast<std::size_t>(y) * out_w;
            for (int x = 0; x < out_w; ++x) {
                double acc = 0.0;
                for (int j = 0; j < ty.ntaps; ++j)
                    acc += w[j] * mid.plane(c)[static_cast<std::size_t>(clamp_index(ty.first[y] + j, src.h)) * out_w + x];
                out_row[x] = static_cast<float>(acc);
            }
        }
    }
    return out;
}

std::vector<double> gaussian_kernel_1d(double sigma, int ksize) {
    require(sigma > 0.0, "gaussian_kernel_1d: sigma must be positive");
    require(ksize >= 1 && ksize % 2 == 1, "gaussian_kernel_1d: kernel size must be odd");
    std::vector<double> k(ksize);
    const int r = ksize / 2;
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        const double v = std::exp(-0.5 * (i / sigma) * (i / sigma));
        k[i + r] = v;
        sum += v;
    }
    for (auto& v : k) v /= sum;
    return k;
}

namespace {
// Symmetric reflection: ...2,1,0 | 0,1,2...
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}
} // namespace

Tensor gaussian_blur(const Tensor& img, double sigma, int ksize) {
    const std::vector<double> k = gaussian_kernel_1d(sigma, ksize);
    const int r = ksize / 2;

    Tensor mid(img.c, img.h, img.w);
    for (int c = 0; c < img.c; ++c)
        for (int y = 0; y < img.h; ++y) {
            const float* row = img.plane(c) + static_cast<std::size_t>(y) * img.w;
            float* out_row = mid.plane(c) + static_cast<std::size_t>(y) * img.w;
            for (int x = 0; x < img.w; ++x) {
                double acc = 0.0;
                for (int j = -r; j <= r; ++j)
                    acc += k[j + r] * row[reflect_index(x + j, img.w)];
                out_row[x] = static_cast<float>(acc);
            }
        }

    Tensor out(img.c, img.h, img.w);
    for (int c = 0; c < img.c; ++c)
        for (int y = 0; y < img.h; ++y) {
            float* out_row = out.plane(c) + static_cast<std::size_t>(y) * img.w;
            for (int x = 0; x < img.w; ++x) {
                double acc = 0.0;
                for (int j = -r; j <= r; ++j)
                    acc += k[j + r] * mid.plane(c)[static_cast<std::size_t>(reflect_index(y + j, img.h)) * img.w + x];
                out_row[x] = static_cast<float>(acc);
            }
        }
    return out;
}

} // namespace addsr
