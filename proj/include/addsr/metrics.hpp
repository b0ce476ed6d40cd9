#pragma once

#include "addsr/image.hpp"

namespace addsr {

// PSNR in dB on BT.601 luminance; identical images return the 100 dB cap.
double psnr(const ImageU8& a, const ImageU8& b);

// Single-scale SSIM on luminance: 11x11 Gaussian window sigma=1.5,
// C1=(0.01*255)^2, C2=(0.03*255)^2, valid borders.
double ssim(const ImageU8& a, const ImageU8& b);

// Fraction of 2D Fourier power at radial frequency above half-Nyquist,
// DC removed. 0 for constant images, 1 for a 1-pixel checkerboard.
double hf_energy(const ImageU8& img);

} // namespace addsr
