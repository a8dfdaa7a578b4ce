#include "avtopo/raster.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace avtopo {

std::string_view to_string(AvClass c) {
  switch (c) {
    case AvClass::arteriole: return "arteriole";
    case AvClass::venule: return "venule";
    case AvClass::vessel: return "vessel";
  }
  return "?";
}

std::string to_string(Color8 c) {
  std::ostringstream os;
  os << '(' << int(c.r) << ',' << int(c.g) << ',' << int(c.b) << ')';
  return os.str();
}

std::string shape_string(Index rows, Index cols) {
  return std::to_string(cols) + "x" + std::to_string(rows);
}

ProbMap ProbMap::checked(AvClass cls, RasterD values) {
  const bool ok = (values >= 0.0).all() && (values <= 1.0).all();
  require(ok, ErrorKind::precondition,
          std::string("probability map '") + std::string(to_string(cls)) +
              "' has samples outside [0,1]");
  return ProbMap{cls, std::move(values)};
}

const Mask& AVGroundTruth::channel(AvClass c) const {
  switch (c) {
    case AvClass::arteriole: return arteriole;
    case AvClass::venule: return venule;
    case AvClass::vessel: break;
  }
  return vessel;
}

Mask AVGroundTruth::crossing() const {
  return ((arteriole != 0) && (venule != 0)).cast<std::uint8_t>();
}

Mask AVGroundTruth::uncertain() const {
  return ((vessel != 0) && (arteriole == 0) && (venule == 0)).cast<std::uint8_t>();
}

LabelPolicy LabelPolicy::rite() {
  LabelPolicy p;
  p.table = {
      {{255, 0, 0}, LabelKind::arteriole},
      {{0, 0, 255}, LabelKind::venule},
      {{0, 255, 0}, LabelKind::crossing},
      {{255, 255, 255}, LabelKind::uncertain},
  };
  return p;
}

Color8 LabelPolicy::color_of(LabelKind kind) const {
  if (kind == LabelKind::background) return background;
  for (const auto& [color, k] : table)
    if (k == kind) return color;
  fail(ErrorKind::parameter, "label policy has no color for the requested class");
}

AVGroundTruth decode_rite_label(const Rgb<std::uint8_t>& rgb, const LabelPolicy& policy) {
  require_same_shape(rgb[0], rgb[1], "label image channels");
  require_same_shape(rgb[0], rgb[2], "label image channels");
  const Index rows = rgb[0].rows(), cols = rgb[0].cols();

  std::map<Color8, LabelKind> lookup;
  for (const auto& [color, kind] : policy.table) lookup[color] = kind;
  lookup[policy.background] = LabelKind::background;

  AVGroundTruth gt;
  gt.arteriole = Mask::Zero(rows, cols);
  gt.venule = Mask::Zero(rows, cols);
  gt.vessel = Mask::Zero(rows, cols);
  gt.fov = full_mask(rows, cols);

  std::map<Color8, Index> unknown;
  for (Index i = 0; i < rgb[0].size(); ++i) {
    const Color8 c{rgb[0](i), rgb[1](i), rgb[2](i)};
    const auto it = lookup.find(c);
    if (it == lookup.end()) {
      ++unknown[c];
      continue;
    }
    switch (it->second) {
      case LabelKind::background: break;
      case LabelKind::arteriole: gt.arteriole(i) = gt.vessel(i) = 1; break;
      case LabelKind::venule: gt.venule(i) = gt.vessel(i) = 1; break;
      case LabelKind::crossing: gt.arteriole(i) = gt.venule(i) = gt.vessel(i) = 1; break;
      case LabelKind::uncertain: gt.vessel(i) = policy.uncertain_in_vessel ? 1 : 0; break;
    }
  }
  if (!unknown.empty()) {
    std::ostringstream os;
    os << "label image has colors outside the policy:";
    for (const auto& [c, n] : unknown) os << ' ' << to_string(c) << " x" << n;
    fail(ErrorKind::decode, os.str());
  }
  return gt;
}

Rgb<std::uint8_t> encode_rite_label(const AVGroundTruth& gt, const LabelPolicy& policy) {
  const Index rows = gt.vessel.rows(), cols = gt.vessel.cols();
  Rgb<std::uint8_t> out{Raster<std::uint8_t>(rows, cols), Raster<std::uint8_t>(rows, cols),
                        Raster<std::uint8_t>(rows, cols)};
  for (Index i = 0; i < gt.vessel.size(); ++i) {
    const bool a = gt.arteriole(i), v = gt.venule(i), any = gt.vessel(i);
    LabelKind kind = LabelKind::background;
    if (a && v) kind = LabelKind::crossing;
    else if (a) kind = LabelKind::arteriole;
    else if (v) kind = LabelKind::venule;
    else if (any) kind = LabelKind::uncertain;
    const Color8 c = policy.color_of(kind);
    out[0](i) = c.r;
    out[1](i) = c.g;
    out[2](i) = c.b;
  }
  return out;
}

Mask threshold(const RasterD& p, double t) {
  require(t >= 0.0 && t <= 1.0, ErrorKind::parameter, "threshold must lie in [0,1]");
  return (p >= t).cast<std::uint8_t>();
}

BinaryMask threshold(const ProbMap& p, double t) { return {p.cls, threshold(p.values, t)}; }

RasterD rgb_to_gray(const Rgb<double>& rgb, const Eigen::Array3d& weights) {
  require((weights >= 0.0).all() && weights.sum() > 0.0, ErrorKind::parameter,
          "gray weights must be nonnegative with positive sum");
  require_same_shape(rgb[0], rgb[1], "rgb channels");
  require_same_shape(rgb[0], rgb[2], "rgb channels");
  return (weights[0] * rgb[0] + weights[1] * rgb[1] + weights[2] * rgb[2]) / weights.sum();
}

Rgb<double> normalize(const Rgb<std::uint8_t>& rgb) {
  return {rgb[0].cast<double>() / 255.0, rgb[1].cast<double>() / 255.0,
          rgb[2].cast<double>() / 255.0};
}

Mask full_mask(Index rows, Index cols) { return Mask::Ones(rows, cols); }

}  // namespace avtopo
