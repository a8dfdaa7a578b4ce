#include "avtopo/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "avtopo/filters.hpp"

namespace avtopo {

void PreprocessParams::validate() const {
  require(dark_patch >= 1, ErrorKind::parameter, "dark_patch must be >= 1");
  require(atmosphere_quantile > 0.0 && atmosphere_quantile <= 1.0, ErrorKind::parameter,
          "atmosphere_quantile must lie in (0,1]");
  require(transmission_floor > 0.0 && transmission_floor < 1.0, ErrorKind::parameter,
          "transmission_floor must lie in (0,1)");
  require(hp_sigma > 0.0, ErrorKind::parameter, "hp_sigma must be positive");
}

RasterD dark_channel(const Rgb<double>& rgb, int half) {
  const RasterD channel_min = rgb[0].min(rgb[1]).min(rgb[2]);
  return min_filter(channel_min, half);
}

Rgb<double> correct_illumination(const Rgb<double>& rgb, const PreprocessParams& params) {
  params.validate();
  require(rgb[0].size() > 0, ErrorKind::precondition, "empty image");
  require_same_shape(rgb[0], rgb[1], "rgb channels");
  require_same_shape(rgb[0], rgb[2], "rgb channels");

  const RasterD dark = dark_channel(rgb, params.dark_patch);

  // Nearest-rank quantile of the dark channel.
  std::vector<double> sorted(dark.data(), dark.data() + dark.size());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(params.atmosphere_quantile * n)));
  const double cut = sorted[rank - 1];

  const auto bright = (dark >= cut);
  const double n_bright = static_cast<double>(bright.count());
  Eigen::Array3d atmosphere;
  for (int c = 0; c < 3; ++c) {
    atmosphere[c] = bright.select(rgb[c], 0.0).sum() / n_bright;
    require(atmosphere[c] > 0.0, ErrorKind::preprocessing,
            "degenerate bright reference: zero in channel " + std::to_string(c));
  }

  const RasterD transmission =
      (1.0 - dark / atmosphere.maxCoeff()).max(params.transmission_floor);
  Rgb<double> out;
  for (int c = 0; c < 3; ++c) {
    out[c] = ((rgb[c] - atmosphere[c] * (1.0 - transmission)) / transmission).max(0.0).min(1.0);
  }
  return out;
}

RasterD gaussian_highpass(const RasterD& gray, double sigma) {
  return gray - gaussian_blur(gray, sigma);
}

RasterD enhance_vessels(const RasterD& gray, double hp_sigma) {
  require(hp_sigma > 0.0, ErrorKind::parameter, "hp_sigma must be positive");
  const RasterD hp = gaussian_highpass(gray, hp_sigma);
  const double lo = hp.minCoeff(), hi = hp.maxCoeff();
  const double scale = std::max(1.0, hp.abs().maxCoeff());
  if (!(hi - lo > 1e-12 * scale)) return RasterD::Constant(gray.rows(), gray.cols(), 0.5);
  return (hp - lo) / (hi - lo);
}

Rgb<double> enhance_vessels(const Rgb<double>& rgb, double hp_sigma) {
  return {enhance_vessels(rgb[0], hp_sigma), enhance_vessels(rgb[1], hp_sigma),
          enhance_vessels(rgb[2], hp_sigma)};
}

}  // namespace avtopo
