#include <algorithm>
#include <cmath>
#include <functional>

#include "avtopo/metrics.hpp"

namespace avtopo {
namespace {

std::optional<double> percent(Index num, Index den) {
  if (den == 0) return std::nullopt;
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::optional<double> ConfusionCounts::f1() const {
  return percent(2 * tp, 2 * tp + fp + fn);
}

std::optional<double> ConfusionCounts::accuracy() const {
  return n() ? percent(tp + tn, n()) : std::nullopt;
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

std::optional<double> RateCount::rate() const { return percent(hit, total); }

RateCount& RateCount::operator+=(const RateCount& o) {
  hit += o.hit;
  total += o.total;
  return *this;
}

ConfusionCounts av_confusion(const Mask& pred_a, const Mask& pred_v, const AVGroundTruth& gt,
                             const Mask& centerline, const AvOptions& options) {
  require_same_shape(pred_a, gt.vessel, "av metrics (arteriole prediction vs ground truth)");
  require_same_shape(pred_v, gt.vessel, "av metrics (venule prediction vs ground truth)");
  if (options.region == Region::centerline)
    require_same_shape(centerline, gt.vessel, "av metrics (centerline vs ground truth)");

  ConfusionCounts c;
  for (Index i = 0; i < gt.vessel.size(); ++i) {
    if (!gt.vessel(i)) continue;
    if (options.region == Region::centerline && !centerline(i)) continue;
    const bool ga = gt.arteriole(i) != 0, gv = gt.venule(i) != 0;
    bool truth_a;
    if (ga && gv) {
      if (!options.include_crossings) continue;
      truth_a = true;
    } else if (ga || gv) {
      truth_a = ga;
    } else {
      continue;  // uncertain
    }
    const bool pa = pred_a(i) != 0, pv = pred_v(i) != 0;
    if (pa == pv) continue;  // unclassified or contradictory
    if (truth_a) pa ? ++c.tp : ++c.fn;
    else pa ? ++c.fp : ++c.tn;
  }
  return c;
}

RateCount vessel_detection_rate(const Mask& pred_vessel, const AVGroundTruth& gt) {
  require_same_shape(pred_vessel, gt.vessel, "vessel detection rate");
  return {((pred_vessel != 0) && (gt.vessel != 0)).count(), count(gt.vessel)};
}

RateCount tree_length_rate(const Mask& pred_vessel, const Mask& gt_skel) {
  require_same_shape(pred_vessel, gt_skel, "tree length rate");
  return {((pred_vessel != 0) && (gt_skel != 0)).count(), count(gt_skel)};
}

RateCount branch_detection_rate(const Mask& pred_vessel, const BranchLabeling& branches,
                                double tau) {
  require(tau > 0.0 && tau <= 1.0, ErrorKind::parameter, "tau must lie in (0, 1]");
  require_same_shape(pred_vessel, branches.labels, "branch detection rate");
  std::vector<Index> covered(static_cast<std::size_t>(branches.n_branches), 0);
  for (Index i = 0; i < pred_vessel.size(); ++i) {
    const int label = branches.labels(i);
    if (label > 0 && pred_vessel(i)) ++covered[static_cast<std::size_t>(label - 1)];
  }
  RateCount r{0, branches.n_branches};
  for (std::size_t b = 0; b < covered.size(); ++b) {
    // The slack only absorbs rounding in tau * size; counts are integers.
    const double need = tau * static_cast<double>(branches.branch_sizes[b]) - 1e-9;
    if (static_cast<double>(covered[b]) >= need) ++r.hit;
  }
  return r;
}

MetricCounts& MetricCounts::operator+=(const MetricCounts& o) {
  av_all += o.av_all;
  av_centerline += o.av_centerline;
  branch += o.branch;
  tree_length += o.tree_length;
  vessel += o.vessel;
  return *this;
}

MetricReport MetricReport::from_counts(const MetricCounts& counts) {
  MetricReport r;
  r.counts = counts;
  r.f1_all = counts.av_all.f1();
  r.acc_all = counts.av_all.accuracy();
  r.f1_centerline = counts.av_centerline.f1();
  r.acc_centerline = counts.av_centerline.accuracy();
  r.branch_rate = counts.branch.rate();
  r.tree_length_rate = counts.tree_length.rate();
  r.vessel_rate = counts.vessel.rate();
  return r;
}

MetricCounts evaluate_counts(const PredictionMasks& pred, const AVGroundTruth& gt,
                             const EvaluateOptions& options) {
  require_same_shape(pred.vessel, gt.vessel, "metrics (prediction vs ground truth)");
  const Mask skel = thin(gt.vessel);
  const BranchLabeling branches = branch_decompose(skel);

  MetricCounts c;
  c.av_all = av_confusion(pred.arteriole, pred.venule, gt, skel,
                          {Region::all, options.include_crossings});
  c.av_centerline = av_confusion(pred.arteriole, pred.venule, gt, skel,
                                 {Region::centerline, options.include_crossings});
  c.branch = branch_detection_rate(pred.vessel, branches, options.tau);
  c.tree_length = tree_length_rate(pred.vessel, skel);
  c.vessel = vessel_detection_rate(pred.vessel, gt);
  return c;
}

AggregateScores aggregate_scores(const MetricReport& r) {
  AggregateScores s;
  if (r.f1_all && r.acc_all) s.overlap = (*r.f1_all + *r.acc_all) / 2.0;
  if (r.tree_length_rate && r.branch_rate && r.vessel_rate)
    s.topology = (*r.tree_length_rate + *r.branch_rate + *r.vessel_rate) / 3.0;
  return s;
}

RocCurve roc(const RasterD& prob, const Mask& gt, const Mask& fov, std::size_t n_thresholds) {
  require_same_shape(prob, gt, "roc (prediction vs ground truth)");
  require_same_shape(prob, fov, "roc (prediction vs field of view)");
  require(count(fov) > 0, ErrorKind::precondition, "roc: field of view is empty");
  require(n_thresholds >= 2, ErrorKind::parameter, "roc: n_thresholds must be >= 2");

  std::vector<std::pair<double, bool>> samples;
  Index n_pos = 0;
  for (Index i = 0; i < prob.size(); ++i) {
    if (!fov(i)) continue;
    samples.emplace_back(prob(i), gt(i) != 0);
    n_pos += gt(i) != 0;
  }
  const Index n_neg = static_cast<Index>(samples.size()) - n_pos;
  std::sort(samples.begin(), samples.end(), std::greater<>());

  std::vector<double> distinct;
  for (const auto& s : samples)
    if (distinct.empty() || s.first != distinct.back()) distinct.push_back(s.first);
  std::vector<double> picked;
  if (distinct.size() <= n_thresholds) {
    picked = distinct;
  } else {
    const double step = static_cast<double>(distinct.size() - 1) / static_cast<double>(n_thresholds - 1);
    for (std::size_t k = 0; k < n_thresholds; ++k)
      picked.push_back(distinct[static_cast<std::size_t>(std::llround(step * static_cast<double>(k)))]);
  }

  RocCurve curve;
  curve.thresholds.push_back(std::nextafter(std::max(1.0, distinct.front()), 2.0 + distinct.front()));
  for (double t : picked)
    if (t < curve.thresholds.back()) curve.thresholds.push_back(t);
  if (curve.thresholds.back() > 0.0) curve.thresholds.push_back(0.0);

  std::size_t cursor = 0;
  Index tp = 0, fp = 0;
  for (double t : curve.thresholds) {
    while (cursor < samples.size() && samples[cursor].first >= t) {
      samples[cursor].second ? ++tp : ++fp;
      ++cursor;
    }
    curve.tpr.push_back(n_pos ? static_cast<double>(tp) / static_cast<double>(n_pos) : 0.0);
    curve.fpr.push_back(n_neg ? static_cast<double>(fp) / static_cast<double>(n_neg) : 0.0);
  }
  if (n_pos == 0 || n_neg == 0) return curve;

  double auc = 0.0;
  for (std::size_t k = 1; k < curve.thresholds.size(); ++k)
    auc += (curve.fpr[k] - curve.fpr[k - 1]) * (curve.tpr[k] + curve.tpr[k - 1]) / 2.0;
  curve.auc = auc;
  return curve;
}

}  // namespace avtopo
