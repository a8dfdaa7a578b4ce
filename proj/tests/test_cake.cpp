#include "doctest.h"

#include <cmath>
#include <numbers>

#include "avtopo/cake.hpp"
#include "avtopo/filters.hpp"
#include "avtopo/verify/oracles.hpp"

using namespace avtopo;

namespace {

const CakeBank& bank() {
  static const CakeBank b = build_bank();
  return b;
}

RasterD rot90(const RasterD& k) {
  const Index n = k.rows();
  RasterD r(n, n);
  for (Index y = 0; y < n; ++y)
    for (Index x = 0; x < n; ++x) r(y, x) = k(x, n - 1 - y);
  return r;
}

double correlation(const RasterD& a, const RasterD& b) {
  return (a * b).sum() / std::sqrt(a.square().sum() * b.square().sum());
}

// Frequency-grid angle of sample (y, x) on the centered design grid.
double angle_at(Index y, Index x, Index n) {
  const double c = (n - 1) / 2.0;
  return std::atan2(y - c, x - c);
}

double wrap(double a) {
  a = std::fmod(a, 2 * std::numbers::pi);
  if (a < -std::numbers::pi) a += 2 * std::numbers::pi;
  if (a > std::numbers::pi) a -= 2 * std::numbers::pi;
  return a;
}

}  // namespace

TEST_CASE("params are validated") {
  CakeParams p;
  CHECK_NOTHROW(p.validate());
  p.n_orientations = 23;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.kernel_size = 8;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.kernel_size = 67;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.dc_sigma = 0;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("B-spline partition of unity and support") {
  for (int k = 0; k <= 4; ++k) {
    for (double x = -0.5; x < 0.5; x += 0.0625) {
      double sum = 0;
      for (int j = -6; j <= 6; ++j) sum += bspline(k, x - j);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(bspline(k, (k + 1) / 2.0 + 1e-9) == 0.0);
  }
  CHECK(bspline(3, 0.0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("thetas are 2 pi i / n") {
  REQUIRE(bank().thetas.size() == 24);
  for (std::size_t i = 0; i < 24; ++i)
    CHECK(bank().thetas[i] == doctest::Approx(2 * std::numbers::pi * i / 24).epsilon(1e-15));
}

TEST_CASE("spectra and DC window tile the radial window") {
  RasterD sum = bank().dc;
  for (const ComplexRaster& s : bank().spectra) sum += s.real();
  CHECK((sum - radial_window_grid(bank().params)).abs().maxCoeff() <= 1e-9);
}

TEST_CASE("spectrum at theta + pi is the point reflection of theta") {
  const ComplexRaster a = bank().spectra[0], b = bank().spectra[12];
  const Index n = a.rows();
  double worst = 0;
  for (Index y = 0; y < n; ++y)
    for (Index x = 0; x < n; ++x) worst = std::max(worst, std::abs(b(y, x) - a(n - 1 - y, n - 1 - x)));
  CHECK(worst <= 1e-9);
}

TEST_CASE("spectrum vanishes outside the angular support") {
  const CakeParams& p = bank().params;
  const double s = p.angular_step(), limit = (p.spline_order + 1) * s / 2;
  const Index n = p.design_size, c = n / 2;
  for (std::size_t i : {0u, 5u, 17u}) {
    const ComplexRaster& spec = bank().spectra[i];
    for (Index y = 0; y < n; ++y)
      for (Index x = 0; x < n; ++x) {
        if (y == c && x == c) continue;
        if (std::abs(wrap(angle_at(y, x, n) - bank().thetas[i])) > limit + 1e-12)
          CHECK(std::abs(spec(y, x)) == 0.0);
      }
  }
}

TEST_CASE("kernels: zero mean, cropped size, rotation by quarter turns") {
  for (const RasterD& k : bank().kernels) {
    CHECK(k.rows() == 7);
    CHECK(std::abs(k.sum()) < 1e-12);
  }
  RasterD r = bank().kernels[0];
  for (int q = 1; q < 4; ++q) {
    r = rot90(r);
    CHECK(correlation(bank().kernels[static_cast<std::size_t>(6 * q)], r) >= 0.95);
  }
}

TEST_CASE("kernel 0 prefers vertical bars") {
  RasterD vertical = RasterD::Zero(21, 21), horizontal = RasterD::Zero(21, 21);
  vertical.col(10).setOnes();
  horizontal.row(10).setOnes();
  const RasterD& k = bank().kernels[0];
  const double v = std::abs(correlate(vertical, k)(10, 10));
  const double h = std::abs(correlate(horizontal, k)(10, 10));
  CHECK(v >= 3 * h);
}

TEST_CASE("constant image gives zero scores") {
  const OrientationScores s = orientation_scores(RasterD::Constant(15, 17, 0.8), bank());
  REQUIRE(s.scores.size() == 24);
  for (const RasterD& r : s.scores) {
    CHECK(r.rows() == 15);
    CHECK(r.cols() == 17);
    CHECK(r.abs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("scores are linear in the image") {
  const RasterD a = verify::line_image(25, 0.3), b = verify::line_image(25, 1.9);
  const OrientationScores sa = orientation_scores(a, bank()), sb = orientation_scores(b, bank()),
                          sab = orientation_scores(RasterD(2.0 * a - 0.5 * b), bank());
  for (std::size_t i = 0; i < 24; ++i)
    CHECK((sab.scores[i] - (2.0 * sa.scores[i] - 0.5 * sb.scores[i])).abs().maxCoeff() < 1e-9);
}

TEST_CASE("bars: the argmax orientation is the perpendicular bank angle") {
  int correct = 0;
  for (std::size_t i = 0; i < 24; ++i) {
    const double direction = bank().thetas[i] + std::numbers::pi / 2;
    const OrientationScores s = orientation_scores(verify::line_image(41, direction), bank());
    std::size_t best = 0;
    for (std::size_t j = 1; j < 24; ++j)
      if (s.scores[j](20, 20) > s.scores[best](20, 20)) best = j;
    // kernels at theta and theta + pi coincide
    correct += best % 12 == i % 12;
  }
  CHECK(correct >= 22);
}

// The 7x7 crop leaves small side lobes, so unimodality is checked on the
// orientations holding at least a tenth of the peak energy.
TEST_CASE("property: strong responses form one arc of orientations") {
  for (std::size_t i = 0; i < 24; ++i) {
    const double direction = bank().thetas[i] + std::numbers::pi / 2;
    const OrientationScores s = orientation_scores(verify::line_image(41, direction), bank());
    std::vector<double> energy(12, 0.0);
    for (std::size_t j = 0; j < 12; ++j)
      energy[j] = s.scores[j].block(8, 8, 25, 25).square().sum();
    const double peak = *std::max_element(energy.begin(), energy.end());
    int rises = 0;  // off -> on transitions around the circle
    for (std::size_t j = 0; j < 12; ++j) {
      const bool on = energy[j] >= 0.1 * peak, prev = energy[(j + 11) % 12] >= 0.1 * peak;
      rises += on && !prev;
    }
    CHECK(rises == 1);
  }
}

TEST_CASE("property: scores are translation equivariant in the interior") {
  const Index n = 40, shift = 3, margin = 7 + shift;
  RasterD img(n, n);
  for (Index y = 0; y < n; ++y)
    for (Index x = 0; x < n; ++x) img(y, x) = std::sin(0.4 * x + 0.1 * y) + 0.3 * std::cos(0.7 * y);
  RasterD moved = RasterD::Zero(n, n);
  moved.block(shift, shift, n - shift, n - shift) = img.block(0, 0, n - shift, n - shift);
  const OrientationScores a = orientation_scores(img, bank()), b = orientation_scores(moved, bank(), 4);
  double worst = 0;
  for (std::size_t i = 0; i < 24; ++i)
    for (Index y = margin; y < n - margin; ++y)
      for (Index x = margin; x < n - margin; ++x)
        worst = std::max(worst, std::abs(b.scores[i](y, x) - a.scores[i](y - shift, x - shift)));
  CHECK(worst < 1e-12);
}

TEST_CASE("parallel scoring matches serial scoring") {
  const RasterD img = verify::line_image(31, 0.7);
  const OrientationScores a = orientation_scores(img, bank(), 1), b = orientation_scores(img, bank(), 8);
  for (std::size_t i = 0; i < 24; ++i) CHECK((a.scores[i] == b.scores[i]).all());
}
