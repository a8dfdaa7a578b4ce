#include <algorithm>
#include <cmath>

#include "avtopo/skeletal.hpp"
#include "avtopo/topoloss.hpp"

namespace avtopo {

void LossWeights::validate() const {
  require(dice >= 0 && cldice >= 0 && mse >= 0 && bce >= 0, ErrorKind::parameter,
          "loss weights must be nonnegative");
  require(dice + cldice + mse + bce > 0, ErrorKind::parameter, "loss weights are all zero");
}

void LossConfig::validate() const {
  weights.validate();
  skel.validate();
  require(bce_clamp > 0.0 && bce_clamp < 0.5, ErrorKind::parameter,
          "bce clamp must lie in (0, 0.5)");
}

GatePolicy::GatePolicy(double dice_gate) : dice_gate_(dice_gate) {
  require(dice_gate > 0.0 && dice_gate < 1.0, ErrorKind::parameter,
          "dice gate must lie in (0,1)");
}

GateState GatePolicy::observe(double vessel_dice_score) {
  if (vessel_dice_score >= dice_gate_) state_ = GateState::centerline_weighted;
  return state_;
}

CostMap CostMap::uniform(Index rows, Index cols) {
  return {RasterD::Ones(rows, cols), Provenance::uniform};
}

double dice_loss(const RasterD& p, const Mask& g, double epsilon) {
  require_same_shape(p, g, "dice_loss");
  const RasterD gd = g.cast<double>();
  return 1.0 - (2.0 * (p * gd).sum() + epsilon) / (p.sum() + gd.sum() + epsilon);
}

RasterD dice_loss_grad(const RasterD& p, const Mask& g, double epsilon) {
  require_same_shape(p, g, "dice_loss_grad");
  const RasterD gd = g.cast<double>();
  const double num = 2.0 * (p * gd).sum() + epsilon;
  const double den = p.sum() + gd.sum() + epsilon;
  return -(2.0 * gd * den - num) / (den * den);
}

namespace {

struct ClDiceParts {
  RasterD skel;
  double prec_num, prec_den, sens_num, sens_den;
  double prec() const { return prec_num / prec_den; }
  double sens() const { return sens_num / sens_den; }
};

ClDiceParts cldice_parts(const RasterD& p, const Mask& g, const Mask& g_skel,
                         const SoftSkelParams& params) {
  require_same_shape(p, g, "cldice_loss");
  require_same_shape(p, g_skel, "cldice_loss");
  require(((g_skel != 0) && (g == 0)).count() == 0, ErrorKind::precondition,
          "cldice_loss: skeleton is not contained in the mask");
  const double eps = params.epsilon;
  ClDiceParts parts;
  parts.skel = soft_skeleton(p, params);
  parts.prec_num = (parts.skel * g.cast<double>()).sum() + eps;
  parts.prec_den = parts.skel.sum() + eps;
  parts.sens_num = (g_skel.cast<double>() * p).sum() + eps;
  parts.sens_den = static_cast<double>(count(g_skel)) + eps;
  return parts;
}

}  // namespace

double cldice_loss(const RasterD& p, const Mask& g, const Mask& g_skel,
                   const SoftSkelParams& params) {
  const ClDiceParts c = cldice_parts(p, g, g_skel, params);
  const double a = c.prec(), b = c.sens();
  return 1.0 - 2.0 * a * b / (a + b);
}

RasterD cldice_loss_grad(const RasterD& p, const Mask& g, const Mask& g_skel,
                         const SoftSkelParams& params) {
  const ClDiceParts c = cldice_parts(p, g, g_skel, params);
  const double a = c.prec(), b = c.sens();
  const double s2 = (a + b) * (a + b);
  const double d_prec = -2.0 * b * b / s2;
  const double d_sens = -2.0 * a * a / s2;
  const RasterD d_skel = d_prec * (g.cast<double>() - a) / c.prec_den;
  return soft_skeleton_vjp(p, params, d_skel) + d_sens * g_skel.cast<double>() / c.sens_den;
}

CostMap build_cost_map(const Mask& g, const Mask& g_skel, const RasterD& geodesic_dist,
                       double w_max) {
  require(w_max >= 1.0, ErrorKind::parameter, "w_max must be >= 1");
  require_same_shape(g, g_skel, "build_cost_map");
  require_same_shape(g, geodesic_dist, "build_cost_map");
  double d_max = 0.0;
  for (Index i = 0; i < g.size(); ++i) {
    const double d = geodesic_dist(i);
    if (!g(i)) {
      require(!std::isfinite(d), ErrorKind::precondition,
              "build_cost_map: finite distance outside the vessel mask");
      continue;
    }
    if (g_skel(i))
      require(d == 0.0, ErrorKind::precondition,
              "build_cost_map: nonzero distance on the centerline");
    if (std::isfinite(d)) d_max = std::max(d_max, d);
  }

  CostMap map{RasterD::Ones(g.rows(), g.cols()), CostMap::Provenance::geodesic};
  for (Index i = 0; i < g.size(); ++i) {
    if (!g(i)) continue;
    const double d = geodesic_dist(i);
    if (!std::isfinite(d)) continue;
    map.alpha(i) = d_max > 0.0 ? 1.0 + (w_max - 1.0) * (1.0 - d / d_max) : w_max;
  }
  return map;
}

CostMap geodesic_cost_map(const Mask& g, const Mask& g_skel, double w_max) {
  if (((g != 0) && (g_skel != 0)).count() == 0) {
    CostMap m = CostMap::uniform(g.rows(), g.cols());
    m.provenance = CostMap::Provenance::geodesic;
    return m;
  }
  const GeodesicField field = geodesic_distance(g, g_skel);
  return build_cost_map(g, g_skel, field.dist, w_max);
}

static void check_weighted(const RasterD& p, const Mask& g, const RasterD& alpha, const char* what) {
  require_same_shape(p, g, what);
  require_same_shape(p, alpha, what);
  require((alpha > 0.0).all(), ErrorKind::precondition,
          std::string(what) + ": cost map must be positive");
}

double weighted_mse(const RasterD& p, const Mask& g, const RasterD& alpha) {
  check_weighted(p, g, alpha, "weighted_mse");
  return (alpha * (p - g.cast<double>()).square()).sum() / alpha.sum();
}

RasterD weighted_mse_grad(const RasterD& p, const Mask& g, const RasterD& alpha) {
  check_weighted(p, g, alpha, "weighted_mse_grad");
  return 2.0 * alpha * (p - g.cast<double>()) / alpha.sum();
}

double weighted_bce(const RasterD& p, const Mask& g, const RasterD& alpha, double clamp) {
  check_weighted(p, g, alpha, "weighted_bce");
  const RasterD pc = p.max(clamp).min(1.0 - clamp);
  const RasterD gd = g.cast<double>();
  const RasterD ce = -(gd * pc.log() + (1.0 - gd) * (1.0 - pc).log());
  return (alpha * ce).sum() / alpha.sum();
}

RasterD weighted_bce_grad(const RasterD& p, const Mask& g, const RasterD& alpha, double clamp) {
  check_weighted(p, g, alpha, "weighted_bce_grad");
  const RasterD gd = g.cast<double>();
  const RasterD pc = p.max(clamp).min(1.0 - clamp);
  const RasterD inside = ((p > clamp) && (p < 1.0 - clamp)).cast<double>();
  return inside * alpha * (-gd / pc + (1.0 - gd) / (1.0 - pc)) / alpha.sum();
}

LossTargets make_targets(const AVGroundTruth& gt, double w_max) {
  LossTargets targets;
  for (AvClass c : kAllClasses) {
    ClassTarget& t = targets[c];
    t.mask = (gt.channel(c) != 0).cast<std::uint8_t>();
    t.skeleton = thin(t.mask);
    t.geodesic = geodesic_cost_map(t.mask, t.skeleton, w_max);
  }
  return targets;
}

namespace {

void check_inputs(const PerClass<RasterD>& preds, const LossTargets& targets) {
  for (AvClass c : kAllClasses) {
    const std::string what = std::string("loss channel ") + std::string(to_string(c));
    require_same_shape(preds[c], targets[c].mask, what);
    require_same_shape(preds[c], targets[c].skeleton, what);
    require_same_shape(preds[c], targets[c].geodesic.alpha, what);
  }
}

RasterD alpha_for(const ClassTarget& t, GateState state) {
  if (state == GateState::uniform) return RasterD::Ones(t.mask.rows(), t.mask.cols());
  return t.geodesic.alpha;
}

}  // namespace

LossBreakdown evaluate_loss(const PerClass<RasterD>& preds, const LossTargets& targets,
                            const LossConfig& config, GateState state) {
  config.validate();
  check_inputs(preds, targets);
  const LossWeights& w = config.weights;
  const double eps = config.skel.epsilon;

  LossBreakdown out;
  out.gate_state = state;
  for (AvClass c : kAllClasses) {
    const RasterD& p = preds[c];
    const ClassTarget& t = targets[c];
    const RasterD alpha = alpha_for(t, state);
    ClassLoss& l = out.per_class[c];
    l.dice = dice_loss(p, t.mask, eps);
    l.cldice = cldice_loss(p, t.mask, t.skeleton, config.skel);
    l.mse = weighted_mse(p, t.mask, alpha);
    l.bce = weighted_bce(p, t.mask, alpha, config.bce_clamp);
    l.total = w.dice * l.dice + w.cldice * l.cldice + w.mse * l.mse + w.bce * l.bce;
    out.total += l.total;
  }
  if (config.reduction == ClassReduction::mean) out.total /= 3.0;
  out.vessel_dice_score = 1.0 - out.per_class[AvClass::vessel].dice;
  return out;
}

PerClass<RasterD> loss_gradient(const PerClass<RasterD>& preds, const LossTargets& targets,
                                const LossConfig& config, GateState state) {
  config.validate();
  check_inputs(preds, targets);
  const LossWeights& w = config.weights;
  const double eps = config.skel.epsilon;
  const double scale = config.reduction == ClassReduction::mean ? 1.0 / 3.0 : 1.0;

  PerClass<RasterD> grad;
  for (AvClass c : kAllClasses) {
    const RasterD& p = preds[c];
    const ClassTarget& t = targets[c];
    const RasterD alpha = alpha_for(t, state);
    RasterD g = RasterD::Zero(p.rows(), p.cols());
    if (w.dice > 0) g += w.dice * dice_loss_grad(p, t.mask, eps);
    if (w.cldice > 0) g += w.cldice * cldice_loss_grad(p, t.mask, t.skeleton, config.skel);
    if (w.mse > 0) g += w.mse * weighted_mse_grad(p, t.mask, alpha);
    if (w.bce > 0) g += w.bce * weighted_bce_grad(p, t.mask, alpha, config.bce_clamp);
    grad[c] = scale * g;
  }
  return grad;
}

PerClass<RasterD> by_class(std::span<const ProbMap> preds) {
  PerClass<RasterD> out;
  PerClass<bool> seen{};
  for (const ProbMap& m : preds) {
    require(!seen[m.cls], ErrorKind::precondition,
            std::string("duplicate prediction channel: ") + std::string(to_string(m.cls)));
    seen[m.cls] = true;
    out[m.cls] = m.values;
  }
  for (AvClass c : kAllClasses)
    require(seen[c], ErrorKind::precondition,
            std::string("missing prediction channel: ") + std::string(to_string(c)));
  return out;
}

LossBreakdown total_loss(std::span<const ProbMap> preds, const LossTargets& targets,
                         const LossConfig& config, GatePolicy& gate) {
  const PerClass<RasterD> maps = by_class(preds);
  require_same_shape(maps[AvClass::vessel], targets[AvClass::vessel].mask, "total_loss");
  gate.observe(1.0 - dice_loss(maps[AvClass::vessel], targets[AvClass::vessel].mask,
                               config.skel.epsilon));
  return evaluate_loss(maps, targets, config, gate.state());
}

}  // namespace avtopo
