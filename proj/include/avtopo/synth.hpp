#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "avtopo/metrics.hpp"
#include "avtopo/raster.hpp"
#include "avtopo/skeletal.hpp"

namespace avtopo {

/// Seeded generator with platform-independent uniform draws.
class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

 private:
  std::mt19937_64 engine_;
};

struct TreeSpec {
  std::uint64_t seed = 1;
  int depth = 2;               ///< binary tree with 2^(depth+1) - 1 branches
  double arm_length = 22.0;    ///< mean trunk length in steps of one pixel
  double arm_jitter = 4.0;     ///< uniform +- jitter on every arm length
  double arm_decay = 0.85;     ///< length factor per level
  std::vector<int> widths{3, 2, 1};  ///< disk diameter per level; the last entry repeats
  double bend = 0.08;          ///< max heading change per step, radians
  double min_angle = 25.0;     ///< child deviation from the parent heading, degrees
  double max_angle = 45.0;
  int min_arm = 8;             ///< shortest arm, pixels
  double clearance = 3.0;      ///< minimum gap between unrelated arms, pixels
  int canvas_width = 128;
  int canvas_height = 128;
  double root_x = 0.5;         ///< trunk start, fraction of the width
  int max_retries = 200;       ///< redraws per arm before the tree restarts
  int max_restarts = 20;

  int width_at(int level) const;
  void validate() const;
};

struct Pixel {
  int y = 0, x = 0;
  auto operator<=>(const Pixel&) const = default;
};

struct Branch {
  std::vector<Pixel> pixels;  ///< own centerline pixels; a child omits the shared junction
  int level = 0;
  int parent = -1;
  int width = 1;
};

struct SynthTruth {
  TreeSpec spec;
  Mask mask;
  Mask centerline;
  LabelRaster branch_labels;  ///< branch b is label b + 1
  int n_branches = 0;
  std::vector<Branch> branches;
  int redraws = 0;            ///< rejected arm candidates
  int restarts = 0;
};

/// Deterministic in spec.seed. Throws ErrorKind::generation when the tree does
/// not fit the canvas within the retry budget.
SynthTruth generate(const TreeSpec& spec);

/// Recorded branch labels in the form branch_detection_rate() consumes.
BranchLabeling labeling_of(const SynthTruth& truth);

struct Perturbation {
  enum class Kind { identity, gap, erase_branch };
  Kind kind = Kind::identity;
  int branch = 0;  ///< target branch index
  int length = 4;  ///< gap length in centerline pixels
};

struct ExpectedDeltas {
  Index centerline_removed = 0;
  Index mask_removed = 0;
  int n_branches = 0;
  int target = -1;              ///< branch that lost pixels; -1 for identity
  Index target_size = 0;
  Index target_remaining = 0;   ///< its centerline pixels left
  /// Rates of the perturbed mask against the recorded truth, known from the
  /// construction alone.
  double tree_length_rate = 100.0;
  double vessel_rate = 100.0;

  double branch_rate(double tau) const;
};

struct PerturbResult {
  Mask prediction;
  ExpectedDeltas expected;
};

/// Removes every mask pixel whose nearest recorded centerline pixel lies in the
/// perturbed stretch (ties go to the earlier branch and earlier pixel).
/// gap: `length` consecutive pixels from the middle of a branch.
/// erase_branch: all pixels of the branch.
/// Throws ErrorKind::parameter for an out-of-range branch or gap length.
PerturbResult perturb(const SynthTruth& truth, const Perturbation& op);

struct AvSynthTruth {
  SynthTruth artery, vein;
  AVGroundTruth gt;
};

/// Two trees on one canvas; overlaps become crossings.
AvSynthTruth generate_av(const TreeSpec& artery, const TreeSpec& vein);

struct Rect {
  int y0 = 0, x0 = 0, y1 = 0, x1 = 0;  ///< half-open
};

struct SwapResult {
  PredictionMasks prediction;
  Index swapped = 0;  ///< evaluated (all-pixel region) pixels whose class flipped
  ConfusionCounts expected;
};

/// Perfect prediction with arteriole and venule exchanged inside `region`.
SwapResult swap_labels(const AvSynthTruth& truth, const Rect& region);

}  // namespace avtopo
