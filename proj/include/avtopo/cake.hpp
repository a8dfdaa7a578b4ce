#pragma once

#include <complex>
#include <span>
#include <vector>

#include "avtopo/raster.hpp"

namespace avtopo {

using ComplexRaster = Raster<std::complex<double>>;

struct CakeParams {
  int n_orientations = 24;
  int kernel_size = 7;    ///< odd; side of the cropped spatial kernel
  int design_size = 65;   ///< odd; side of the frequency-domain synthesis grid
  int spline_order = 3;   ///< angular B-spline order
  double radial_decay = 0.9;  ///< radius (fraction of Nyquist) where the radial window starts to fall
  double dc_sigma = 1.5;  ///< spatial std (pixels) of the Gaussian whose spectrum is the DC window

  void validate() const;
  double angular_step() const;
};

/// Centered cardinal B-spline of the given order, support [-(k+1)/2, (k+1)/2].
double bspline(int order, double x);

/// Radial window over normalized radius rho = |omega| / pi: 1 up to `decay`,
/// raised-cosine fall to 0 at rho = 1, 0 beyond.
double radial_window(double rho, double decay);

/// Radial window sampled on the centered design grid.
RasterD radial_window_grid(const CakeParams& params);

/// Low-frequency window G(omega) = exp(-dc_sigma^2 |omega|^2 / 2) on the design
/// grid, times the radial window. It is the part of the spectrum that no
/// orientation piece covers.
RasterD dc_window(const CakeParams& params);

/// Single-sided cake piece for orientation theta on the centered design grid:
/// B_k(wrap(phi - theta) / s) (periodized over the circle) * M(rho) * (1 - G).
/// Row index runs along omega_y (downwards), column index along omega_x.
ComplexRaster build_cake_spectrum(double theta, const CakeParams& params);

/// Inverse DFT of a centered spectrum, returned centered (origin in the middle).
ComplexRaster spatial_wavelet(const ComplexRaster& spectrum);

/// Central `size` x `size` crop of spatial_wavelet(spectrum).
ComplexRaster spatial_wavelet_crop(const ComplexRaster& spectrum, int size);

struct CakeBank {
  CakeParams params;
  std::vector<double> thetas;          ///< 2 pi i / n
  std::vector<ComplexRaster> spectra;  ///< design_size^2 each
  std::vector<RasterD> kernels;        ///< kernel_size^2, negated real part, zero mean
  RasterD dc;                          ///< DC window, stored apart from the pieces
};

CakeBank build_bank(const CakeParams& params = {});

struct OrientationScores {
  std::vector<RasterD> scores;  ///< one image-sized raster per orientation
  Index rows = 0, cols = 0;
};

/// Cross-correlation of the image with each kernel, reflective boundary.
OrientationScores orientation_scores(const RasterD& gray, std::span<const RasterD> kernels,
                                     int jobs = 1);
OrientationScores orientation_scores(const RasterD& gray, const CakeBank& bank, int jobs = 1);

}  // namespace avtopo
