#include "avtopo/filters.hpp"

#include <algorithm>
#include <limits>

namespace avtopo {

std::vector<double> gaussian_kernel(double sigma) {
  require(sigma > 0.0, ErrorKind::parameter, "gaussian sigma must be positive");
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

RasterD separable_filter(const RasterD& image, std::span<const double> kernel) {
  const Index rows = image.rows(), cols = image.cols();
  const Index r = static_cast<Index>(kernel.size() / 2);
  RasterD tmp = RasterD::Zero(rows, cols);
  for (Index y = 0; y < rows; ++y)
    for (Index x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (Index d = -r; d <= r; ++d) acc += kernel[d + r] * image(y, reflect_index(x + d, cols));
      tmp(y, x) = acc;
    }
  RasterD out = RasterD::Zero(rows, cols);
  for (Index y = 0; y < rows; ++y)
    for (Index x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (Index d = -r; d <= r; ++d) acc += kernel[d + r] * tmp(reflect_index(y + d, rows), x);
      out(y, x) = acc;
    }
  return out;
}

RasterD gaussian_blur(const RasterD& image, double sigma) {
  const auto k = gaussian_kernel(sigma);
  return separable_filter(image, k);
}

RasterD min_filter(const RasterD& image, int half) {
  const Index rows = image.rows(), cols = image.cols();
  RasterD tmp(rows, cols), out(rows, cols);
  for (Index y = 0; y < rows; ++y)
    for (Index x = 0; x < cols; ++x) {
      const Index lo = std::max<Index>(0, x - half), hi = std::min<Index>(cols - 1, x + half);
      tmp(y, x) = image.row(y).segment(lo, hi - lo + 1).minCoeff();
    }
  for (Index y = 0; y < rows; ++y) {
    const Index lo = std::max<Index>(0, y - half), hi = std::min<Index>(rows - 1, y + half);
    out.row(y) = tmp.middleRows(lo, hi - lo + 1).colwise().minCoeff();
  }
  return out;
}

}  // namespace avtopo
