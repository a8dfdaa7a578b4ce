#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "avtopo/error.hpp"

namespace avtopo {

using Index = Eigen::Index;

/// Row-major 2D grid of samples. rows() is the image height, cols() the width.
template <typename Scalar>
using Raster = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using RasterD = Raster<double>;
using Mask = Raster<std::uint8_t>;
using LabelRaster = Raster<std::int32_t>;

/// Planar three-channel image (R, G, B).
template <typename Scalar>
using Rgb = std::array<Raster<Scalar>, 3>;

enum class AvClass : std::uint8_t { arteriole = 0, venule = 1, vessel = 2 };

inline constexpr std::array<AvClass, 3> kAllClasses{AvClass::arteriole, AvClass::venule,
                                                    AvClass::vessel};

std::string_view to_string(AvClass c);

/// Fixed-size record indexed by AvClass.
template <typename T>
struct PerClass {
  std::array<T, 3> items{};

  T& operator[](AvClass c) { return items[static_cast<std::size_t>(c)]; }
  const T& operator[](AvClass c) const { return items[static_cast<std::size_t>(c)]; }
};

/// Per-pixel probability for one class channel; samples in [0, 1].
struct ProbMap {
  AvClass cls = AvClass::vessel;
  RasterD values;

  /// Throws ErrorKind::precondition if a sample lies outside [0, 1] or is NaN.
  static ProbMap checked(AvClass cls, RasterD values);
};

/// Hard segmentation for one class channel; samples are 0 or 1.
struct BinaryMask {
  AvClass cls = AvClass::vessel;
  Mask bits;
};

/// Morano-style target: continuous arteriole, venule and vessel channels plus
/// the field of view. Crossing pixels are set in both arteriole and venule.
struct AVGroundTruth {
  Mask arteriole;
  Mask venule;
  Mask vessel;
  Mask fov;

  const Mask& channel(AvClass c) const;
  Mask crossing() const;
  /// Vessel pixels that are neither arteriole nor venule.
  Mask uncertain() const;
};

struct Color8 {
  std::uint8_t r = 0, g = 0, b = 0;
  auto operator<=>(const Color8&) const = default;
};

std::string to_string(Color8 c);

enum class LabelKind { background, arteriole, venule, crossing, uncertain };

/// Maps label-image colors to vessel classes.
struct LabelPolicy {
  std::vector<std::pair<Color8, LabelKind>> table;
  Color8 background{0, 0, 0};
  /// When false, uncertain pixels are dropped from the vessel channel too.
  bool uncertain_in_vessel = true;

  /// red=arteriole, blue=venule, green=crossing, white=uncertain, black=background.
  static LabelPolicy rite();

  Color8 color_of(LabelKind kind) const;
};

AVGroundTruth decode_rite_label(const Rgb<std::uint8_t>& rgb,
                                const LabelPolicy& policy = LabelPolicy::rite());

/// Inverse of decode_rite_label for images made of policy colors.
Rgb<std::uint8_t> encode_rite_label(const AVGroundTruth& gt,
                                    const LabelPolicy& policy = LabelPolicy::rite());

/// Pixel is foreground iff p >= t.
Mask threshold(const RasterD& p, double t);
BinaryMask threshold(const ProbMap& p, double t);

inline const Eigen::Array3d kLuminanceWeights{0.299, 0.587, 0.114};

/// gray = (w . rgb) / sum(w). Weights must be nonnegative with positive sum.
RasterD rgb_to_gray(const Rgb<double>& rgb, const Eigen::Array3d& weights = kLuminanceWeights);

/// 8-bit samples divided by 255.
Rgb<double> normalize(const Rgb<std::uint8_t>& rgb);

Mask full_mask(Index rows, Index cols);

inline Index count(const Mask& m) { return (m != 0).count(); }

std::string shape_string(Index rows, Index cols);

template <typename A, typename B>
bool same_shape(const A& a, const B& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

/// Throws ErrorKind::dimension naming both shapes.
template <typename A, typename B>
void require_same_shape(const A& a, const B& b, std::string_view what) {
  if (!same_shape(a, b)) {
    fail(ErrorKind::dimension, std::string(what) + ": size mismatch " +
                                   shape_string(a.rows(), a.cols()) + " vs " +
                                   shape_string(b.rows(), b.cols()));
  }
}

}  // namespace avtopo
