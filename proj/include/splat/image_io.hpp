#pragma once

#include <string>

#include "splat/types.hpp"

namespace splat {

/// Reads/writes images by extension: .pfm (32-bit float, lossless — the
/// format used for rendered training targets), .ppm (8-bit binary P6), .png
/// (8-bit RGB). Unit-range float pixels; 8-bit formats quantize with
/// round-to-nearest.
Imagef read_image(const std::string& path);
void write_image(const std::string& path, const Imagef& img);

Imagef read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Imagef& img);

Imagef read_pfm(const std::string& path);
void write_pfm(const std::string& path, const Imagef& img);

Imagef read_png(const std::string& path);
void write_png(const std::string& path, const Imagef& img);

}  // namespace splat
