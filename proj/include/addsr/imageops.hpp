#pragma once

#include <string>
#include <vector>

#include "addsr/tensor.hpp"

namespace addsr {

enum class ResizeKernel { Bicubic, Bilinear, Area };

ResizeKernel resize_kernel_from_string(const std::string& name);
std::string to_string(ResizeKernel k);

// Separable resampling on planar float CHW data (any intensity scale).
// Downscaling stretches the kernel support by the inverse scale so the
// result is antialiased; weights are normalized per output pixel, so
// constant images stay constant.
Tensor resize_chw(const Tensor& src, int out_h, int out_w, ResizeKernel kernel);

inline Tensor resize_scale(const Tensor& src, double scale, ResizeKernel kernel) {
    const double oh = src.h * scale;
    const double ow = src.w * scale;
    require(std::abs(oh - std::round(oh)) < 1e-9 && std::abs(ow - std::round(ow)) < 1e-9,
            "resize_scale: dimensions not divisible by scale factor");
    return resize_chw(src, static_cast<int>(std::lround(oh)), static_cast<int>(std::lround(ow)), kernel);
}

// Normalized, truncated 1D Gaussian; length must be odd. Double precision.
std::vector<double> gaussian_kernel_1d(double sigma, int ksize);

// Separable Gaussian blur with reflect padding.
Tensor gaussian_blur(const Tensor& img, double sigma, int ksize);

} // namespace addsr
