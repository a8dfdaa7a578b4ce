#include "avtopo/cake.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "avtopo/filters.hpp"
#include "avtopo/parallel.hpp"

namespace avtopo {
namespace {

constexpr double kPi = std::numbers::pi;

using ComplexMatrix = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Wraps an angle into [-pi, pi).
double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

// Centered frequency of grid index i on an n-point grid, in radians/sample.
double grid_frequency(Index i, Index n) { return 2.0 * kPi * static_cast<double>(i - n / 2) / n; }

// Rows of the centered inverse DFT matrix for spatial offsets -h..h.
ComplexMatrix inverse_dft_rows(Index n, Index size) {
  const Index h = size / 2, c = n / 2;
  ComplexMatrix e(size, n);
  for (Index a = 0; a < size; ++a)
    for (Index b = 0; b < n; ++b) {
      const double phase = 2.0 * kPi * static_cast<double>((a - h) * (b - c)) / n;
      e(a, b) = std::polar(1.0 / n, phase);
    }
  return e;
}

}  // namespace

void CakeParams::validate() const {
  require(n_orientations >= 2 && n_orientations % 2 == 0, ErrorKind::parameter,
          "n_orientations must be even and >= 2");
  require(kernel_size >= 1 && kernel_size % 2 == 1, ErrorKind::parameter,
          "kernel_size must be odd");
  require(design_size % 2 == 1 && design_size >= kernel_size, ErrorKind::parameter,
          "design_size must be odd and >= kernel_size");
  require(spline_order >= 0, ErrorKind::parameter, "spline_order must be >= 0");
  require(radial_decay > 0.0 && radial_decay <= 1.0, ErrorKind::parameter,
          "radial_decay must lie in (0,1]");
  require(dc_sigma > 0.0, ErrorKind::parameter, "dc_sigma must be positive");
}

double CakeParams::angular_step() const { return 2.0 * kPi / n_orientations; }

double bspline(int order, double x) {
  const double half = 0.5 * (order + 1);
  if (x < -half || x >= half) return 0.0;
  if (order == 0) return 1.0;
  double sum = 0.0, factorial = 1.0;
  for (int i = 2; i <= order; ++i) factorial *= i;
  for (int j = 0; j <= order + 1; ++j) {
    const double t = x + half - j;
    if (t <= 0.0) break;
    sum += ((j % 2) ? -1.0 : 1.0) * binomial(order + 1, j) * std::pow(t, order);
  }
  return sum / factorial;
}

double radial_window(double rho, double decay) {
  if (rho <= decay) return 1.0;
  if (rho >= 1.0) return 0.0;
  return 0.5 * (1.0 + std::cos(kPi * (rho - decay) / (1.0 - decay)));
}

RasterD radial_window_grid(const CakeParams& params) {
  params.validate();
  const Index n = params.design_size;
  RasterD m(n, n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c)
      m(r, c) = radial_window(std::hypot(grid_frequency(c, n), grid_frequency(r, n)) / kPi,
                              params.radial_decay);
  return m;
}

RasterD dc_window(const CakeParams& params) {
  params.validate();
  const Index n = params.design_size;
  const double s2 = params.dc_sigma * params.dc_sigma;
  RasterD g(n, n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) {
      const double wx = grid_frequency(c, n), wy = grid_frequency(r, n);
      g(r, c) = std::exp(-0.5 * s2 * (wx * wx + wy * wy));
    }
  return g * radial_window_grid(params);
}

ComplexRaster build_cake_spectrum(double theta, const CakeParams& params) {
  params.validate();
  const Index n = params.design_size;
  const double step = params.angular_step();
  const int periods = static_cast<int>(std::ceil(0.5 * (params.spline_order + 1) /
                                                 params.n_orientations)) + 1;
  const double s2 = params.dc_sigma * params.dc_sigma;

  ComplexRaster out(n, n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) {
      const double wx = grid_frequency(c, n), wy = grid_frequency(r, n);
      const double rho = std::hypot(wx, wy) / kPi;
      const double x = wrap_angle(std::atan2(wy, wx) - theta) / step;
      double angular = 0.0;
      for (int m = -periods; m <= periods; ++m)
        angular += bspline(params.spline_order, x + m * params.n_orientations);
      const double high = 1.0 - std::exp(-0.5 * s2 * (wx * wx + wy * wy));
      out(r, c) = angular * radial_window(rho, params.radial_decay) * high;
    }
  return out;
}

ComplexRaster spatial_wavelet_crop(const ComplexRaster& spectrum, int size) {
  const Index n = spectrum.rows();
  const ComplexMatrix e = inverse_dft_rows(n, size);
  const ComplexMatrix x = e * spectrum.matrix() * e.transpose();
  return x.array();
}

ComplexRaster spatial_wavelet(const ComplexRaster& spectrum) {
  return spatial_wavelet_crop(spectrum, static_cast<int>(spectrum.rows()));
}

CakeBank build_bank(const CakeParams& params) {
  params.validate();
  CakeBank bank;
  bank.params = params;
  bank.dc = dc_window(params);
  for (int i = 0; i < params.n_orientations; ++i) {
    const double theta = params.angular_step() * i;
    ComplexRaster spectrum = build_cake_spectrum(theta, params);
    RasterD kernel = -spatial_wavelet_crop(spectrum, params.kernel_size).real();
    kernel -= kernel.mean();
    bank.thetas.push_back(theta);
    bank.spectra.push_back(std::move(spectrum));
    bank.kernels.push_back(std::move(kernel));
  }
  return bank;
}

OrientationScores orientation_scores(const RasterD& gray, std::span<const RasterD> kernels,
                                     int jobs) {
  require(gray.size() > 0, ErrorKind::precondition, "empty image");
  OrientationScores out;
  out.rows = gray.rows();
  out.cols = gray.cols();
  out.scores.resize(kernels.size());
  parallel_for(kernels.size(), jobs,
               [&](std::size_t i) { out.scores[i] = correlate(gray, kernels[i]); });
  return out;
}

OrientationScores orientation_scores(const RasterD& gray, const CakeBank& bank, int jobs) {
  return orientation_scores(gray, std::span<const RasterD>(bank.kernels), jobs);
}

}  // namespace avtopo
