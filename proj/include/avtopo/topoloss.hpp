#pragma once

#include <span>

#include "avtopo/raster.hpp"

namespace avtopo {

/// Coefficients of the per-class loss
///   L = dice * L_Dice + cldice * L_clDice + mse * L_MSE(alpha) + bce * L_BCE(alpha).
struct LossWeights {
  double dice = 1.0;
  double cldice = 0.5;
  double mse = 0.5;
  double bce = 0.5;

  void validate() const;
};

struct SoftSkelParams {
  int k = 5;              ///< erosion iterations
  double epsilon = 1e-7;  ///< smoothing term in every ratio

  void validate() const;
};

enum class GateState { uniform, centerline_weighted };

/// Switches the mixed terms from uniform to centerline weighting once the
/// vessel channel's Dice score reaches `dice_gate`. Never switches back.
class GatePolicy {
 public:
  explicit GatePolicy(double dice_gate = 0.6);

  /// Records a vessel Dice score; returns the state afterwards.
  GateState observe(double vessel_dice_score);

  GateState state() const { return state_; }
  double dice_gate() const { return dice_gate_; }

 private:
  double dice_gate_;
  GateState state_ = GateState::uniform;
};

struct CostMap {
  enum class Provenance { uniform, geodesic };
  RasterD alpha;
  Provenance provenance = Provenance::uniform;

  static CostMap uniform(Index rows, Index cols);
};

// Soft morphology with the cross-shaped 3x3 element. Out-of-image neighbours
// are ignored. Ties pick the first neighbour in row-major order.
RasterD soft_erode(const RasterD& p);
RasterD soft_dilate(const RasterD& p);
RasterD soft_open(const RasterD& p);

/// Iterative soft skeleton: skel = relu(p - open(p)); then k times
/// p <- erode(p), skel <- skel + relu(p - open(p)) (1 - skel).
RasterD soft_skeleton(const RasterD& p, const SoftSkelParams& params = {});

/// Vector-Jacobian product of soft_skeleton at p: returns
/// sum_j upstream_j * d skel_j / d p_i. relu'(0) is taken as 0.
RasterD soft_skeleton_vjp(const RasterD& p, const SoftSkelParams& params, const RasterD& upstream);

/// 1 - (2 sum(p g) + eps) / (sum p + sum g + eps)
double dice_loss(const RasterD& p, const Mask& g, double epsilon = 1e-7);
RasterD dice_loss_grad(const RasterD& p, const Mask& g, double epsilon = 1e-7);

/// 1 - 2 Tprec Tsens / (Tprec + Tsens) with Tprec from the soft skeleton of p
/// against g and Tsens from the skeleton of g against p.
/// Throws ErrorKind::precondition unless g_skel is a subset of g.
double cldice_loss(const RasterD& p, const Mask& g, const Mask& g_skel,
                   const SoftSkelParams& params = {});
RasterD cldice_loss_grad(const RasterD& p, const Mask& g, const Mask& g_skel,
                         const SoftSkelParams& params = {});

/// alpha = 1 + (w_max - 1)(1 - d / d_max) on the vessel, 1 elsewhere. Vessel
/// pixels the geodesic front never reached (infinite d) get alpha = 1.
CostMap build_cost_map(const Mask& g, const Mask& g_skel, const RasterD& geodesic_dist,
                       double w_max = 2.0);

/// Geodesic transform from g_skel inside g, mapped through build_cost_map().
CostMap geodesic_cost_map(const Mask& g, const Mask& g_skel, double w_max = 2.0);

/// sum alpha (p - g)^2 / sum alpha
double weighted_mse(const RasterD& p, const Mask& g, const RasterD& alpha);
RasterD weighted_mse_grad(const RasterD& p, const Mask& g, const RasterD& alpha);

/// sum alpha BCE(clamp(p), g) / sum alpha
double weighted_bce(const RasterD& p, const Mask& g, const RasterD& alpha, double clamp = 1e-7);
RasterD weighted_bce_grad(const RasterD& p, const Mask& g, const RasterD& alpha,
                          double clamp = 1e-7);

/// Ground-truth data one class needs: mask, centerline and geodesic cost map.
struct ClassTarget {
  Mask mask;
  Mask skeleton;
  CostMap geodesic;
};

using LossTargets = PerClass<ClassTarget>;

/// Skeletons by thin(), cost maps by geodesic_cost_map().
LossTargets make_targets(const AVGroundTruth& gt, double w_max = 2.0);

enum class ClassReduction { sum, mean };

struct LossConfig {
  LossWeights weights;
  SoftSkelParams skel;
  double bce_clamp = 1e-7;
  ClassReduction reduction = ClassReduction::sum;

  void validate() const;
};

struct ClassLoss {
  double dice = 0, cldice = 0, mse = 0, bce = 0, total = 0;
};

struct LossBreakdown {
  PerClass<ClassLoss> per_class;
  double total = 0;
  GateState gate_state = GateState::uniform;
  double vessel_dice_score = 0;  ///< 1 - L_Dice of the vessel channel
};

/// Pure evaluation with a fixed gate state.
LossBreakdown evaluate_loss(const PerClass<RasterD>& preds, const LossTargets& targets,
                            const LossConfig& config, GateState state);

/// Gradient of evaluate_loss().total with respect to every prediction pixel.
PerClass<RasterD> loss_gradient(const PerClass<RasterD>& preds, const LossTargets& targets,
                                const LossConfig& config, GateState state);

/// Observes the vessel Dice score of `preds` on the gate, then evaluates with
/// the resulting state. Requires each class exactly once.
LossBreakdown total_loss(std::span<const ProbMap> preds, const LossTargets& targets,
                         const LossConfig& config, GatePolicy& gate);

/// Arranges a list of class maps by class; throws ErrorKind::precondition when
/// a class is missing or repeated.
PerClass<RasterD> by_class(std::span<const ProbMap> preds);

}  // namespace avtopo
