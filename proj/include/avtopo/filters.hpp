#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "avtopo/raster.hpp"

namespace avtopo {

/// Half-sample symmetric reflection (d c b a | a b c d | d c b a) of an
/// index into [0, n).
inline Index reflect_index(Index i, Index n) {
  if (n == 1) return 0;
  const Index period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

/// Normalized sampled Gaussian with radius ceil(4 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Separable correlation of rows then columns with a symmetric 1D kernel,
/// reflective boundary.
RasterD separable_filter(const RasterD& image, std::span<const double> kernel);

RasterD gaussian_blur(const RasterD& image, double sigma);

/// 2D cross-correlation, out(y,x) = sum k(dy,dx) in(y+dy, x+dx), with the
/// kernel centered and reflective boundary. Kernel dims must be odd.
template <typename Derived, typename KDerived>
Raster<typename Derived::Scalar> correlate(const Eigen::ArrayBase<Derived>& image,
                                           const Eigen::ArrayBase<KDerived>& kernel) {
  using Scalar = typename Derived::Scalar;
  const Index rows = image.rows(), cols = image.cols();
  const Index kr = kernel.rows() / 2, kc = kernel.cols() / 2;
  Raster<Scalar> out = Raster<Scalar>::Zero(rows, cols);
  for (Index dy = -kr; dy <= kr; ++dy) {
    for (Index dx = -kc; dx <= kc; ++dx) {
      const Scalar w = kernel(dy + kr, dx + kc);
      if (w == Scalar(0)) continue;
      for (Index y = 0; y < rows; ++y) {
        const Index sy = reflect_index(y + dy, rows);
        for (Index x = 0; x < cols; ++x) out(y, x) += w * image(sy, reflect_index(x + dx, cols));
      }
    }
  }
  return out;
}

/// Minimum over the (2 half + 1)^2 window, clipped at the image border.
RasterD min_filter(const RasterD& image, int half);

}  // namespace avtopo
