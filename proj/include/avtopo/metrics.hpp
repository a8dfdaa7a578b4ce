#pragma once

#include <optional>
#include <vector>

#include "avtopo/raster.hpp"
#include "avtopo/skeletal.hpp"

namespace avtopo {

enum class Region { all, centerline };

/// Arteriole is the positive class.
struct ConfusionCounts {
  Index tp = 0, fp = 0, fn = 0, tn = 0;

  Index n() const { return tp + fp + fn + tn; }
  std::optional<double> f1() const;        ///< percent; null on an empty set
  std::optional<double> accuracy() const;  ///< percent; null on an empty set
  ConfusionCounts& operator+=(const ConfusionCounts& o);
};

/// hit of total; rate() is 100 hit / total, null when total is 0.
struct RateCount {
  Index hit = 0, total = 0;

  std::optional<double> rate() const;
  RateCount& operator+=(const RateCount& o);
};

struct AvOptions {
  Region region = Region::all;
  /// Count ground-truth crossings as arteriole instead of excluding them.
  bool include_crossings = false;
};

/// Confusion counts over ground-truth vessel pixels that are plain arteriole or
/// venule (restricted to `centerline` for Region::centerline), intersected with
/// pixels the prediction labels as exactly one of arteriole or venule.
ConfusionCounts av_confusion(const Mask& pred_a, const Mask& pred_v, const AVGroundTruth& gt,
                             const Mask& centerline, const AvOptions& options = {});

/// Vessel pixels of the ground truth covered by the prediction.
RateCount vessel_detection_rate(const Mask& pred_vessel, const AVGroundTruth& gt);

/// Skeleton pixels covered by the prediction.
RateCount tree_length_rate(const Mask& pred_vessel, const Mask& gt_skel);

/// Branches with at least `tau` of their pixels covered. tau in (0, 1].
RateCount branch_detection_rate(const Mask& pred_vessel, const BranchLabeling& branches,
                                double tau = 0.8);

/// Backing counts for one image. Pooling is elementwise addition.
struct MetricCounts {
  ConfusionCounts av_all, av_centerline;
  RateCount branch, tree_length, vessel;

  MetricCounts& operator+=(const MetricCounts& o);
};

/// Percentages in [0, 100]; null where the evaluation set is empty.
struct MetricReport {
  std::optional<double> f1_all, acc_all;
  std::optional<double> f1_centerline, acc_centerline;
  std::optional<double> branch_rate, tree_length_rate, vessel_rate;
  MetricCounts counts;

  static MetricReport from_counts(const MetricCounts& counts);
};

struct PredictionMasks {
  Mask arteriole, venule, vessel;
};

struct EvaluateOptions {
  double tau = 0.8;
  bool include_crossings = false;
};

/// Full metric counts for one image; the ground-truth centerline and branches
/// come from thin() and branch_decompose() of the vessel channel.
MetricCounts evaluate_counts(const PredictionMasks& pred, const AVGroundTruth& gt,
                             const EvaluateOptions& options = {});

struct AggregateScores {
  std::optional<double> overlap;   ///< (f1_all + acc_all) / 2
  std::optional<double> topology;  ///< (tree + branch + vessel) / 3
};

AggregateScores aggregate_scores(const MetricReport& report);

struct RocCurve {
  std::vector<double> thresholds;  ///< descending
  std::vector<double> tpr, fpr;
  std::optional<double> auc;       ///< null for single-class ground truth
};

/// Pixels inside `fov` are positive at threshold t when prob >= t. Thresholds
/// are the distinct predicted values (evenly subsampled to at most
/// n_thresholds) bracketed by a sentinel above 1 and by 0.
RocCurve roc(const RasterD& prob, const Mask& gt, const Mask& fov,
             std::size_t n_thresholds = 1024);

}  // namespace avtopo
