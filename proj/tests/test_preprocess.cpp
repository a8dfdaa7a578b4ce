#include "doctest.h"

#include <cmath>
#include <numbers>

#include "avtopo/filters.hpp"
#include "avtopo/preprocess.hpp"

using namespace avtopo;

namespace {

Rgb<double> uniform(Index rows, Index cols, double r, double g, double b) {
  return {RasterD::Constant(rows, cols, r), RasterD::Constant(rows, cols, g),
          RasterD::Constant(rows, cols, b)};
}

double stddev(const RasterD& x) {
  const double m = x.mean();
  return std::sqrt((x - m).square().mean());
}

// Peak-to-peak of the interior of a row (boundary rows and columns skipped).
double amplitude(const RasterD& x, Index margin) {
  const auto inner = x.block(margin, margin, x.rows() - 2 * margin, x.cols() - 2 * margin);
  return inner.maxCoeff() - inner.minCoeff();
}

RasterD sinusoid(Index n, double period) {
  RasterD s(n, n);
  for (Index y = 0; y < n; ++y)
    for (Index x = 0; x < n; ++x) s(y, x) = 0.5 + 0.4 * std::sin(2 * std::numbers::pi * x / period);
  return s;
}

}  // namespace

TEST_CASE("params are validated") {
  PreprocessParams p;
  CHECK_NOTHROW(p.validate());
  p.dark_patch = 0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.atmosphere_quantile = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.transmission_floor = 1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.hp_sigma = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("dark channel is the windowed minimum over channels") {
  Rgb<double> img = uniform(9, 9, 0.8, 0.7, 0.9);
  img[1](4, 4) = 0.1;
  const RasterD d = dark_channel(img, 1);
  CHECK(d(3, 3) == 0.1);
  CHECK(d(5, 5) == 0.1);
  CHECK(d(2, 2) == 0.7);
  CHECK(d(0, 0) == 0.7);
}

TEST_CASE("uniform gray input stays uniform") {
  const Rgb<double> out = correct_illumination(uniform(20, 20, 0.5, 0.5, 0.5), {});
  for (const RasterD& c : out) CHECK(c.maxCoeff() - c.minCoeff() < 1e-12);
}

TEST_CASE("all-white input is returned unchanged") {
  const Rgb<double> in = uniform(12, 12, 1.0, 1.0, 1.0);
  const Rgb<double> out = correct_illumination(in, {});
  for (int c = 0; c < 3; ++c) CHECK((out[c] - in[c]).abs().maxCoeff() < 1e-9);
}

// Haze whose transmission falls linearly across the image over a textured
// scene: brightness ramps from left to right. The ramp has to dominate the
// spread; on a faint ramp the contrast stretch raises it instead.
TEST_CASE("brightness ramp: green spread shrinks after correction") {
  const Index n = 64;
  Rgb<double> img = uniform(n, n, 0, 0, 0);
  for (Index y = 0; y < n; ++y)
    for (Index x = 0; x < n; ++x) {
      const double t = 1.0 - 0.8 * static_cast<double>(x) / (n - 1);
      const double texture = 0.1 * ((x / 4 + y / 4) % 2);
      const double scene[3] = {0.35 + texture, 0.15 + texture, 0.05 + texture};
      for (int c = 0; c < 3; ++c) img[c](y, x) = scene[c] * t + (1.0 - t);
    }
  const Rgb<double> out = correct_illumination(img, {});
  CHECK(stddev(out[1]) < stddev(img[1]));
}

TEST_CASE("property: corrected output is clamped to [0,1]") {
  Rgb<double> img = uniform(16, 16, 0, 0, 0);
  for (Index i = 0; i < 256; ++i) {
    img[0](i) = 0.2 + 0.7 * ((i * 37) % 256) / 255.0;
    img[1](i) = 0.1 + 0.5 * ((i * 91) % 256) / 255.0;
    img[2](i) = 0.05 + 0.3 * ((i * 13) % 256) / 255.0;
  }
  for (const RasterD& c : correct_illumination(img, {})) {
    CHECK(c.minCoeff() >= 0.0);
    CHECK(c.maxCoeff() <= 1.0);
  }
}

TEST_CASE("zero bright reference is a preprocessing error") {
  Rgb<double> img = uniform(8, 8, 0.5, 0.0, 0.5);
  try {
    correct_illumination(img, {});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::preprocessing);
  }
}

TEST_CASE("enhance: constant image gives 0.5") {
  const RasterD out = enhance_vessels(RasterD::Constant(10, 10, 0.3), 2.0);
  CHECK((out - 0.5).abs().maxCoeff() == 0.0);
}

TEST_CASE("enhance: a bright line stands out of the background") {
  const Index n = 61;
  RasterD img = RasterD::Constant(n, n, 0.1);
  img.col(30).setConstant(0.9);
  const RasterD out = enhance_vessels(img, 3.0);
  CHECK(out.col(30).minCoeff() > 0.5);
  // Far from the line the high-pass is zero, which the rescale maps to
  // -min / (max - min).
  const RasterD hp = gaussian_highpass(img, 3.0);
  const double zero_level = -hp.minCoeff() / (hp.maxCoeff() - hp.minCoeff());
  CHECK(out(30, 2) == doctest::Approx(zero_level).epsilon(1e-6));
  CHECK(out(30, 2) < 0.5);
}

TEST_CASE("enhance: long periods are attenuated much more than short ones") {
  const double sigma = 4.0;
  const Index n = 160;
  const Index margin = static_cast<Index>(4 * sigma);
  const double slow = amplitude(gaussian_highpass(sinusoid(n, 80.0), sigma), margin);
  const double fast = amplitude(gaussian_highpass(sinusoid(n, 2 * sigma), sigma), margin);
  CHECK(slow <= 0.5 * fast);
}

TEST_CASE("property: enhanced output lies in [0,1]") {
  for (int seed = 1; seed <= 5; ++seed) {
    RasterD img(24, 24);
    for (Index i = 0; i < img.size(); ++i) img(i) = ((i * 7919 * seed) % 101) / 100.0;
    const RasterD out = enhance_vessels(img, 1.0 + seed);
    CHECK(out.minCoeff() >= 0.0);
    CHECK(out.maxCoeff() <= 1.0);
  }
}

TEST_CASE("property: high-pass commutes with translation away from the border") {
  const double sigma = 2.0;
  const Index n = 60, shift = 5, margin = static_cast<Index>(4 * sigma) + 1 + shift;
  RasterD img(n, n);
  for (Index y = 0; y < n; ++y)
    for (Index x = 0; x < n; ++x) img(y, x) = std::sin(0.3 * x) * std::cos(0.17 * y) + 0.01 * ((x * y) % 7);
  RasterD moved = RasterD::Zero(n, n);
  moved.block(shift, shift, n - shift, n - shift) = img.block(0, 0, n - shift, n - shift);
  const RasterD a = gaussian_highpass(img, sigma), b = gaussian_highpass(moved, sigma);
  double worst = 0.0;
  for (Index y = margin; y < n - margin; ++y)
    for (Index x = margin; x < n - margin; ++x)
      worst = std::max(worst, std::abs(b(y, x) - a(y - shift, x - shift)));
  CHECK(worst < 1e-9);
}

TEST_CASE("gaussian blur preserves constants and mass under reflection") {
  const RasterD c = RasterD::Constant(9, 13, 0.37);
  CHECK((gaussian_blur(c, 2.5) - 0.37).abs().maxCoeff() < 1e-12);
  const auto k = gaussian_kernel(1.5);
  double sum = 0;
  for (double v : k) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(k.size() == 2 * 6 + 1);
}
