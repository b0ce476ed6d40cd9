#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "addsr/tensor.hpp"

namespace addsr {

// Interleaved 8-bit RGB image.
struct ImageU8 {
    int h = 0, w = 0;
    std::vector<std::uint8_t> px; // h*w*3, RGB order

    ImageU8() = default;
    ImageU8(int h_, int w_) : h(h_), w(w_), px(static_cast<std::size_t>(h_) * w_ * 3, 0) {}

    std::uint8_t& at(int y, int x, int ch) { return px[(static_cast<std::size_t>(y) * w + x) * 3 + ch]; }
    std::uint8_t at(int y, int x, int ch) const { return px[(static_cast<std::size_t>(y) * w + x) * 3 + ch]; }

    bool same_shape(const ImageU8& o) const { return h == o.h && w == o.w; }
};

inline std::uint8_t clamp_u8(double x) {
    return static_cast<std::uint8_t>(std::lround(std::min(255.0, std::max(0.0, x))));
}

// u8 RGB -> planar float CHW on the [0,255] scale.
inline Tensor tensor255_from_u8(const ImageU8& img) {
    Tensor t(3, img.h, img.w);
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                t.at(ch, y, x) = static_cast<float>(img.at(y, x, ch));
    return t;
}

inline ImageU8 u8_from_tensor255(const Tensor& t) {
    require(t.c == 3, "u8_from_tensor255: need 3 channels");
    ImageU8 img(t.h, t.w);
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < t.h; ++y)
            for (int x = 0; x < t.w; ++x)
                img.at(y, x, ch) = clamp_u8(t.at(ch, y, x));
    return img;
}

// u8 RGB -> planar float CHW in [-1,1] (model domain).
inline Tensor unit_from_u8(const ImageU8& img) {
    Tensor t(3, img.h, img.w);
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                t.at(ch, y, x) = static_cast<float>(img.at(y, x, ch)) * (2.0f / 255.0f) - 1.0f;
    return t;
}

inline ImageU8 u8_from_unit(const Tensor& t) {
    require(t.c == 3, "u8_from_unit: need 3 channels");
    ImageU8 img(t.h, t.w);
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < t.h; ++y)
            for (int x = 0; x < t.w; ++x)
                img.at(y, x, ch) = clamp_u8((static_cast<double>(t.at(ch, y, x)) + 1.0) * 127.5);
    return img;
}

// ITU-R BT.601 luminance, double precision, on the 0..255 scale.
inline std::vector<double> luminance(const ImageU8& img) {
    std::vector<double> y(static_cast<std::size_t>(img.h) * img.w);
    for (int r = 0; r < img.h; ++r)
        for (int c = 0; c < img.w; ++c)
            y[static_cast<std::size_t>(r) * img.w + c] =
                0.299 * img.at(r, c, 0) + 0.587 * img.at(r, c, 1) + 0.114 * img.at(r, c, 2);
    return y;
}

} // namespace addsr
