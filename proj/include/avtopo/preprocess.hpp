#pragma once

#include "avtopo/raster.hpp"

namespace avtopo {

/// Dark-channel illumination correction and high-pass vessel enhancement.
struct PreprocessParams {
  int dark_patch = 7;                  ///< half-size of the dark-channel window
  double atmosphere_quantile = 0.999;  ///< dark-channel quantile for the bright reference
  double transmission_floor = 0.1;
  double hp_sigma = 10.0;  ///< Gaussian std for vessel enhancement, pixels

  void validate() const;
};

/// Per-pixel minimum over channels and the (2 half + 1)^2 window.
RasterD dark_channel(const Rgb<double>& rgb, int half);

/// Dark-channel homogenization. With D the dark channel, A the per-channel
/// mean of pixels whose D is at or above the quantile, and
/// T = max(1 - D / max(A), floor), returns clamp((I - A (1 - T)) / T).
/// Throws ErrorKind::preprocessing if A is zero in any channel.
Rgb<double> correct_illumination(const Rgb<double>& rgb, const PreprocessParams& params);

/// gray - gaussian_blur(gray, sigma), unscaled.
RasterD gaussian_highpass(const RasterD& gray, double sigma);

/// High-pass followed by min/max rescaling to [0,1]. A result with no dynamic
/// range is returned as a uniform 0.5 map.
RasterD enhance_vessels(const RasterD& gray, double hp_sigma);

/// Channel-wise enhancement for network-style inputs.
Rgb<double> enhance_vessels(const Rgb<double>& rgb, double hp_sigma);

}  // namespace avtopo
