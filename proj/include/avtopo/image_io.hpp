#pragma once

#include <array>
#include <filesystem>

#include "avtopo/raster.hpp"

namespace avtopo::io {

namespace fs = std::filesystem;

/// Decoded PNG samples, normalized to [0,1] by the maximum representable value
/// of the file's bit depth (255 or 65535). Gray files are replicated to RGB.
Rgb<double> read_png_rgb(const fs::path& path);

/// Raw 8-bit RGB samples (label maps). 16-bit files are rejected.
Rgb<std::uint8_t> read_png_rgb8(const fs::path& path);

/// Normalized gray image; color files are mapped with the luminance weights.
RasterD read_png_gray(const fs::path& path);

/// Binary mask: gray >= 0.5.
Mask read_png_mask(const fs::path& path);

/// 8-bit gray PNG; samples in [0,1] are scaled by 255 and rounded to nearest.
void write_png_gray(const fs::path& path, const RasterD& values);
void write_png_mask(const fs::path& path, const Mask& mask);
void write_png_rgb8(const fs::path& path, const Rgb<std::uint8_t>& rgb);
/// Normalized RGB in [0,1], rounded to nearest 8-bit value.
void write_png_rgb(const fs::path& path, const Rgb<double>& rgb);

/// Paletted PNG: label 0 is black; positive labels get fixed, distinct colors.
/// Labels above 255 are written as a 16-bit gray PNG instead.
void write_png_labels(const fs::path& path, const LabelRaster& labels);
LabelRaster read_png_labels(const fs::path& path);

/// Raw little-endian float64 samples in row-major order, plus a JSON sidecar
/// "<path>.json" holding {"width","height","dtype","byte_order"}.
void write_raw_f64(const fs::path& path, const RasterD& values);
RasterD read_raw_f64(const fs::path& path);

fs::path sidecar_path(const fs::path& raw);

/// Whole-file read for hashing.
std::string read_bytes(const fs::path& path);

/// Fixed palette color for label l >= 1.
std::array<std::uint8_t, 3> label_color(int label);

}  // namespace avtopo::io
