#pragma once

#include <string>

#include "addsr/image.hpp"

namespace addsr {

// Baseline JPEG encode-then-decode through the pinned system codec.
// quality in [1, 100].
ImageU8 jpeg_roundtrip(const ImageU8& img, int quality);

void save_png(const std::string& path, const ImageU8& img);
ImageU8 load_image(const std::string& path); // PNG or JPEG

// Codec identification recorded in run manifests.
std::string codec_version_string();

} // namespace addsr
