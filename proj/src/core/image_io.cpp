#include "avtopo/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace avtopo::io {
namespace {

struct PngPixels {
  Index rows = 0, cols = 0;
  int channels = 0;      // 1 or 3
  bool sixteen = false;  // samples are 16-bit
  std::vector<std::uint16_t> samples;
};

void require_file(const fs::path& path) {
  std::error_code ec;
  require(fs::is_regular_file(path, ec), ErrorKind::io, "no such file: " + path.string());
}

PngPixels read_png(const fs::path& path, bool want_color) {
  require_file(path);
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    fail(ErrorKind::io, "cannot read PNG " + path.string() + ": " + image.message);

  PngPixels px;
  px.rows = image.height;
  px.cols = image.width;
  px.sixteen = (image.format & PNG_FORMAT_FLAG_LINEAR) != 0 &&
               !(image.format & PNG_FORMAT_FLAG_COLORMAP);
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  px.channels = (want_color || color) ? 3 : 1;
  image.format = (px.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY) |
                 (px.sixteen ? PNG_FORMAT_FLAG_LINEAR : 0);

  const std::size_t n = static_cast<std::size_t>(px.rows * px.cols * px.channels);
  px.samples.resize(n);
  bool ok = false;
  if (px.sixteen) {
    ok = png_image_finish_read(&image, nullptr, px.samples.data(), 0, nullptr);
  } else {
    std::vector<std::uint8_t> buf(n);
    ok = png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr);
    std::copy(buf.begin(), buf.end(), px.samples.begin());
  }
  if (!ok) fail(ErrorKind::io, "cannot decode PNG " + path.string() + ": " + image.message);
  return px;
}

void write_png(const fs::path& path, std::uint32_t format, Index rows, Index cols,
               const void* data, const void* colormap = nullptr, int entries = 0) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(cols);
  image.height = static_cast<png_uint_32>(rows);
  image.format = format;
  image.colormap_entries = static_cast<png_uint_32>(entries);
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, colormap))
    fail(ErrorKind::io, "cannot write PNG " + path.string() + ": " + image.message);
}

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Rgb<double> read_png_rgb(const fs::path& path) {
  const PngPixels px = read_png(path, true);
  const double scale = px.sixteen ? 65535.0 : 255.0;
  Rgb<double> out;
  for (int c = 0; c < 3; ++c) {
    out[c].resize(px.rows, px.cols);
    for (Index i = 0; i < px.rows * px.cols; ++i) out[c](i) = px.samples[3 * i + c] / scale;
  }
  return out;
}

Rgb<std::uint8_t> read_png_rgb8(const fs::path& path) {
  const PngPixels px = read_png(path, true);
  require(!px.sixteen, ErrorKind::io, "expected an 8-bit label image: " + path.string());
  Rgb<std::uint8_t> out;
  for (int c = 0; c < 3; ++c) {
    out[c].resize(px.rows, px.cols);
    for (Index i = 0; i < px.rows * px.cols; ++i)
      out[c](i) = static_cast<std::uint8_t>(px.samples[3 * i + c]);
  }
  return out;
}

RasterD read_png_gray(const fs::path& path) {
  const PngPixels px = read_png(path, false);
  const double scale = px.sixteen ? 65535.0 : 255.0;
  RasterD out(px.rows, px.cols);
  if (px.channels == 1) {
    for (Index i = 0; i < out.size(); ++i) out(i) = px.samples[i] / scale;
    return out;
  }
  for (Index i = 0; i < out.size(); ++i) {
    out(i) = (kLuminanceWeights[0] * px.samples[3 * i] +
              kLuminanceWeights[1] * px.samples[3 * i + 1] +
              kLuminanceWeights[2] * px.samples[3 * i + 2]) /
             (kLuminanceWeights.sum() * scale);
  }
  return out;
}

Mask read_png_mask(const fs::path& path) { return threshold(read_png_gray(path), 0.5); }

void write_png_gray(const fs::path& path, const RasterD& values) {
  Raster<std::uint8_t> buf = values.unaryExpr([](double v) { return to_u8(v); });
  write_png(path, PNG_FORMAT_GRAY, values.rows(), values.cols(), buf.data());
}

void write_png_mask(const fs::path& path, const Mask& mask) {
  Raster<std::uint8_t> buf = (mask != 0).select(Mask::Constant(mask.rows(), mask.cols(), 255),
                                                Mask::Zero(mask.rows(), mask.cols()));
  write_png(path, PNG_FORMAT_GRAY, mask.rows(), mask.cols(), buf.data());
}

void write_png_rgb8(const fs::path& path, const Rgb<std::uint8_t>& rgb) {
  const Index rows = rgb[0].rows(), cols = rgb[0].cols();
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(rows * cols * 3));
  for (Index i = 0; i < rows * cols; ++i)
    for (int c = 0; c < 3; ++c) buf[3 * i + c] = rgb[c](i);
  write_png(path, PNG_FORMAT_RGB, rows, cols, buf.data());
}

void write_png_rgb(const fs::path& path, const Rgb<double>& rgb) {
  Rgb<std::uint8_t> q;
  for (int c = 0; c < 3; ++c) q[c] = rgb[c].unaryExpr([](double v) { return to_u8(v); });
  write_png_rgb8(path, q);
}

std::array<std::uint8_t, 3> label_color(int label) {
  // 97 is odd, so the red channel alone is a bijection on labels mod 256.
  return {static_cast<std::uint8_t>((label * 97) & 255),
          static_cast<std::uint8_t>((label * 57 + 80) & 255),
          static_cast<std::uint8_t>((label * 151 + 160) & 255)};
}

void write_png_labels(const fs::path& path, const LabelRaster& labels) {
  require((labels >= 0).all(), ErrorKind::precondition, "labels must be nonnegative");
  const int max_label = labels.size() ? labels.maxCoeff() : 0;
  if (max_label > 255) {
    require(max_label <= 65535, ErrorKind::precondition, "too many labels for a PNG");
    Raster<std::uint16_t> buf = labels.cast<std::uint16_t>();
    write_png(path, PNG_FORMAT_LINEAR_Y, labels.rows(), labels.cols(), buf.data());
    return;
  }
  std::vector<std::uint8_t> palette(3 * 256, 0);
  for (int l = 1; l < 256; ++l) {
    const auto c = label_color(l);
    std::copy(c.begin(), c.end(), palette.begin() + 3 * l);
  }
  Raster<std::uint8_t> buf = labels.cast<std::uint8_t>();
  write_png(path, PNG_FORMAT_RGB_COLORMAP, labels.rows(), labels.cols(), buf.data(),
            palette.data(), 256);
}

LabelRaster read_png_labels(const fs::path& path) {
  const PngPixels px = read_png(path, false);
  LabelRaster out(px.rows, px.cols);
  if (px.channels == 1) {
    for (Index i = 0; i < out.size(); ++i) out(i) = px.samples[i];
    return out;
  }
  std::map<std::array<std::uint16_t, 3>, int> lookup;
  lookup[{0, 0, 0}] = 0;
  for (int l = 1; l < 256; ++l) {
    const auto c = label_color(l);
    lookup[{c[0], c[1], c[2]}] = l;
  }
  for (Index i = 0; i < out.size(); ++i) {
    const auto it = lookup.find({px.samples[3 * i], px.samples[3 * i + 1], px.samples[3 * i + 2]});
    require(it != lookup.end(), ErrorKind::decode, "unknown label color in " + path.string());
    out(i) = it->second;
  }
  return out;
}

fs::path sidecar_path(const fs::path& raw) { return fs::path(raw.string() + ".json"); }

void write_raw_f64(const fs::path& path, const RasterD& values) {
  static_assert(std::endian::native == std::endian::little, "raw rasters are little-endian");
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path, std::ios::binary);
  require(bool(os), ErrorKind::io, "cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(values.data()),
           static_cast<std::streamsize>(values.size() * sizeof(double)));
  require(bool(os), ErrorKind::io, "cannot write " + path.string());

  nlohmann::ordered_json header;
  header["width"] = values.cols();
  header["height"] = values.rows();
  header["dtype"] = "float64";
  header["byte_order"] = "little";
  std::ofstream hs(sidecar_path(path));
  require(bool(hs), ErrorKind::io, "cannot write " + sidecar_path(path).string());
  hs << header.dump(2) << '\n';
}

RasterD read_raw_f64(const fs::path& path) {
  require_file(path);
  require_file(sidecar_path(path));
  nlohmann::json header;
  try {
    std::ifstream hs(sidecar_path(path));
    header = nlohmann::json::parse(hs);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::io, "bad raster header " + sidecar_path(path).string() + ": " + e.what());
  }
  const Index cols = header.value("width", Index{0});
  const Index rows = header.value("height", Index{0});
  require(rows > 0 && cols > 0 && header.value("dtype", "") == "float64", ErrorKind::io,
          "bad raster header " + sidecar_path(path).string());
  require(fs::file_size(path) == static_cast<std::uintmax_t>(rows * cols * 8), ErrorKind::io,
          "raster size does not match header: " + path.string());
  RasterD out(rows, cols);
  std::ifstream is(path, std::ios::binary);
  is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size() * 8));
  require(bool(is), ErrorKind::io, "cannot read " + path.string());
  return out;
}

std::string read_bytes(const fs::path& path) {
  require_file(path);
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace avtopo::io
