#include "addsr/metrics.hpp"

#include <cmath>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace addsr {

double psnr(const ImageU8& a, const ImageU8& b) {
    require(a.same_shape(b), "psnr: shape mismatch");
    const std::vector<double> ya = luminance(a);
    const std::vector<double> yb = luminance(b);
    double mse = 0.0;
    for (std::size_t i = 0; i < ya.size(); ++i) {
        const double d = ya[i] - yb[i];
        mse += d * d;
    }
    mse /= static_cast<double>(ya.size());
    if (mse == 0.0) return 100.0; // documented cap for identical images
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace {

std::vector<double> ssim_window() {
    // 11x11 Gaussian, sigma 1.5, normalized.
    const int n = 11, r = 5;
    std::vector<double> w(static_cast<std::size_t>(n) * n);
    double sum = 0.0;
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x) {
            const double v = std::exp(-(x * x + y * y) / (2.0 * 1.5 * 1.5));
            w[static_cast<std::size_t>(y + r) * n + (x + r)] = v;
            sum += v;
        }
    for (auto& v : w) v /= sum;
    return w;
}

} // namespace

double ssim(const ImageU8& a, const ImageU8& b) {
    require(a.same_shape(b), "ssim: shape mismatch");
    require(a.h >= 11 && a.w >= 11, "ssim: image smaller than the 11x11 window");
    static const std::vector<double> win = ssim_window();
    const std::vector<double> ya = luminance(a);
    const std::vector<double> yb = luminance(b);
    const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
    const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
    const int n = 11, r = 5;

    double total = 0.0;
    long count = 0;
    for (int cy = r; cy < a.h - r; ++cy) {
        for (int cx = r; cx < a.w - r; ++cx) {
            double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const double wgt = win[static_cast<std::size_t>(dy + r) * n + (dx + r)];
                    const double va = ya[static_cast<std::size_t>(cy + dy) * a.w + (cx + dx)];
                    const double vb = yb[static_cast<std::size_t>(cy + dy) * a.w + (cx + dx)];
                    mu_a += wgt * va;
                    mu_b += wgt * vb;
                    aa += wgt * va * va;
                    bb += wgt * vb * vb;
                    ab += wgt * va * vb;
                }
            const double var_a = aa - mu_a * mu_a;
            const double var_b = bb - mu_b * mu_b;
            const double cov = ab - mu_a * mu_b;
            const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

namespace {
std::mutex fftw_plan_mutex; // FFTW planning is not thread-safe
}

double hf_energy(const ImageU8& img) {
    const int h = img.h, w = img.w;
    const std::vector<double> y = luminance(img);
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());

    std::vector<double> in(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) in[i] = y[i] - mean;

    std::vector<fftw_complex> out(static_cast<std::size_t>(h) * (w / 2 + 1));
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex);
        plan = fftw_plan_dft_r2c_2d(h, w, in.data(), out.data(), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex);
        fftw_destroy_plan(plan);
    }

    const int half_w = w / 2 + 1;
    double total = 0.0, high = 0.0;
    for (int ky = 0; ky < h; ++ky) {
        const double fy = (ky <= h / 2) ? static_cast<double>(ky) / h
                                        : static_cast<double>(ky - h) / h;
        for (int kx = 0; kx < half_w; ++kx) {
            if (ky == 0 && kx == 0) continue; // DC
            const double fx = static_cast<double>(kx) / w;
            const fftw_complex& c = out[static_cast<std::size_t>(ky) * half_w + kx];
            double p = c[0] * c[0] + c[1] * c[1];
            // r2c stores only kx <= w/2; interior columns represent two
            // conjugate-symmetric bins.
            const bool self_conjugate = (kx == 0) || (w % 2 == 0 && kx == w / 2);
            if (!self_conjugate) p *= 2.0;
            total += p;
            if (std::sqrt(fx * fx + fy * fy) > 0.25) high += p;
        }
    }
    if (total <= 0.0) return 0.0;
    return high / total;
}

} // namespace addsr
