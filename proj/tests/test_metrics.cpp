#include "doctest.h"
#include "support.hpp"

#include <random>

#include "avtopo/metrics.hpp"
#include "avtopo/skeletal.hpp"
#include "avtopo/synth.hpp"
#include "avtopo/verify/oracles.hpp"

using namespace avtopo;

namespace {

AVGroundTruth truth_of(const Mask& artery, const Mask& vein, const Mask& uncertain = {}) {
  AVGroundTruth gt;
  gt.arteriole = artery;
  gt.venule = vein;
  gt.vessel = ((artery != 0) || (vein != 0)).cast<std::uint8_t>();
  if (uncertain.size() > 0) gt.vessel = ((gt.vessel != 0) || (uncertain != 0)).cast<std::uint8_t>();
  gt.fov = full_mask(artery.rows(), artery.cols());
  return gt;
}

// 10 arteriole pixels then 10 venule pixels in one row.
AVGroundTruth hand_truth() {
  Mask a = Mask::Zero(1, 20), v = Mask::Zero(1, 20);
  a.block(0, 0, 1, 10).setOnes();
  v.block(0, 10, 1, 10).setOnes();
  return truth_of(a, v);
}

Mask shift(const Mask& m, Index dy, Index dx) {
  Mask out = Mask::Zero(m.rows() + dy, m.cols() + dx);
  out.block(dy, dx, m.rows(), m.cols()) = m;
  return out;
}

AvSynthTruth av_instance(std::uint64_t seed) {
  TreeSpec a, v;
  a.seed = seed;
  v.seed = seed + 1000;
  a.canvas_width = v.canvas_width = a.canvas_height = v.canvas_height = 96;
  a.depth = v.depth = 1;
  a.root_x = 0.3;
  v.root_x = 0.7;
  return generate_av(a, v);
}

}  // namespace

TEST_CASE("AV confusion: hand instance") {
  const AVGroundTruth gt = hand_truth();
  Mask pa = Mask::Zero(1, 20), pv = Mask::Zero(1, 20);
  pa.block(0, 0, 1, 8).setOnes();
  pv.block(0, 8, 1, 2).setOnes();
  pv.block(0, 10, 1, 9).setOnes();
  pa(0, 19) = 1;
  const ConfusionCounts c = av_confusion(pa, pv, gt, gt.vessel);
  CHECK(c.tp == 8);
  CHECK(c.fp == 1);
  CHECK(c.fn == 2);
  CHECK(c.tn == 9);
  CHECK(*c.f1() == doctest::Approx(100.0 * 16 / 19));
  CHECK(*c.accuracy() == doctest::Approx(85.0));
}

TEST_CASE("AV confusion: perfect, swapped and empty") {
  const AVGroundTruth gt = hand_truth();
  const ConfusionCounts perfect = av_confusion(gt.arteriole, gt.venule, gt, gt.vessel);
  CHECK(*perfect.f1() == 100.0);
  CHECK(*perfect.accuracy() == 100.0);

  const ConfusionCounts swapped = av_confusion(gt.venule, gt.arteriole, gt, gt.vessel);
  CHECK(*swapped.accuracy() == 0.0);

  const ConfusionCounts none = av_confusion(Mask::Zero(1, 20), Mask::Zero(1, 20), gt, gt.vessel);
  CHECK(none.n() == 0);
  CHECK_FALSE(none.f1().has_value());
  CHECK_FALSE(none.accuracy().has_value());
}

TEST_CASE("AV confusion: crossings, uncertain pixels, ambiguous predictions, centerline") {
  const Mask a = support::mask_of({"###."}), v = support::mask_of({"..##"}), u = support::mask_of({"...."});
  AVGroundTruth gt = truth_of(a, v, u);  // pixel 2 is a crossing
  const Mask both = support::mask_of({"####"}), pv = support::mask_of({"...#"});
  CHECK(av_confusion(a, pv, gt, gt.vessel).n() == 3);
  CHECK(av_confusion(a, pv, gt, gt.vessel, {Region::all, true}).n() == 4);
  CHECK(av_confusion(a, pv, gt, gt.vessel, {Region::all, true}).tp == 3);
  // pixels labelled both arteriole and venule are not a classification
  CHECK(av_confusion(both, both, gt, gt.vessel).n() == 0);

  gt = truth_of(support::mask_of({"##...."}), support::mask_of({"....#."}), support::mask_of({"..##.#"}));
  // uncertain pixels are never evaluated
  CHECK(av_confusion(support::mask_of({"######"}), Mask::Zero(1, 6), gt, gt.vessel).n() == 3);

  const Mask center = support::mask_of({"#...#."});
  const ConfusionCounts c = av_confusion(support::mask_of({"######"}), Mask::Zero(1, 6), gt, center,
                                         {Region::centerline, false});
  CHECK(c.n() == 2);
  CHECK(c.tp == 1);
  CHECK(c.fp == 1);
}

TEST_CASE("detection rates: examples") {
  const AVGroundTruth gt = hand_truth();
  CHECK(*vessel_detection_rate(gt.vessel, gt).rate() == 100.0);
  CHECK(*vessel_detection_rate(Mask::Zero(1, 20), gt).rate() == 0.0);
  Mask half = Mask::Zero(1, 20);
  half.block(0, 0, 1, 10).setOnes();
  CHECK(*vessel_detection_rate(half, gt).rate() == 50.0);
  const AVGroundTruth empty = truth_of(Mask::Zero(2, 2), Mask::Zero(2, 2));
  CHECK_FALSE(vessel_detection_rate(Mask::Ones(2, 2), empty).rate().has_value());

  Mask line = Mask::Zero(3, 22);
  line.block(1, 1, 1, 20).setOnes();
  Mask gap = line;
  gap.block(1, 9, 1, 4).setZero();
  CHECK(*tree_length_rate(Mask::Ones(3, 22), line).rate() == 100.0);
  CHECK(*tree_length_rate(gap, line).rate() == 80.0);
  CHECK(*tree_length_rate(Mask::Zero(3, 22), line).rate() == 0.0);
  CHECK_FALSE(tree_length_rate(gap, Mask::Zero(3, 22)).rate().has_value());
}

TEST_CASE("branch detection: Y and tau = 1") {
  Mask y = Mask::Zero(25, 25);
  for (int i = 0; i <= 10; ++i) {
    y(12 - i, 12) = 1;
    y(12 + i, 12 - i) = 1;
    y(12 + std::min(i, 10), 12 + i) = 1;
  }
  const BranchLabeling b = branch_decompose(y);
  REQUIRE(b.n_branches == 3);
  CHECK(*branch_detection_rate(y, b).rate() == 100.0);

  Mask erased = y;
  for (int i = 1; i <= 10; ++i) erased(12 - i, 12) = 0;
  CHECK(*branch_detection_rate(erased, b).rate() == doctest::Approx(200.0 / 3));

  Mask nick = y;
  nick(2, 12) = 0;
  CHECK(branch_detection_rate(nick, b, 1.0).hit == 2);
  CHECK(branch_detection_rate(nick, b, 0.8).hit == 3);
  CHECK_THROWS_AS(branch_detection_rate(y, b, 0.0), Error);
}

TEST_CASE("ROC examples") {
  const Mask gt = support::mask_of({"##..", "#..#", "..##"});
  const RasterD g = gt.cast<double>();
  const Mask fov = full_mask(3, 4);
  CHECK(*roc(g, gt, fov).auc == doctest::Approx(1.0));
  CHECK(*roc(RasterD::Constant(3, 4, 0.4), gt, fov).auc == doctest::Approx(0.5));
  CHECK(*roc(1.0 - g, gt, fov).auc == doctest::Approx(0.0));
  CHECK_FALSE(roc(g, Mask::Zero(3, 4), fov).auc.has_value());
  CHECK_THROWS_AS(roc(g, gt, Mask::Zero(3, 4)), Error);

  // Outside the FOV nothing counts: the wrong pixel (0, 0) is masked away.
  RasterD p = g;
  p(0, 0) = 0.0;
  Mask small = fov;
  small(0, 0) = 0;
  CHECK(*roc(p, gt, small).auc == doctest::Approx(1.0));
}

TEST_CASE("property: ROC curve is monotone and inversion sums to 1") {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const RasterD p = verify::distinct_probabilities(s, 30, 30, 0.0, 1.0);
    std::mt19937 rng(static_cast<unsigned>(s));
    Mask gt(30, 30);
    for (Index i = 0; i < gt.size(); ++i) gt(i) = rng() % 3 == 0;
    const Mask fov = full_mask(30, 30);
    const RocCurve c = roc(p, gt, fov);
    for (std::size_t i = 1; i < c.thresholds.size(); ++i) {
      CHECK(c.thresholds[i] < c.thresholds[i - 1]);
      CHECK(c.tpr[i] >= c.tpr[i - 1]);
      CHECK(c.fpr[i] >= c.fpr[i - 1]);
    }
    CHECK(c.tpr.front() == 0.0);
    CHECK(c.tpr.back() == 1.0);
    CHECK(*c.auc + *roc(1.0 - p, gt, fov).auc == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("aggregate scores") {
  MetricReport r;
  r.f1_all = r.acc_all = r.branch_rate = r.tree_length_rate = r.vessel_rate = 100.0;
  AggregateScores s = aggregate_scores(r);
  CHECK(*s.overlap == 100.0);
  CHECK(*s.topology == 100.0);

  r.f1_all = 95.85;
  r.acc_all = 95.98;
  r.branch_rate = 59.96;
  r.tree_length_rate = 72.93;
  r.vessel_rate = 77.85;
  s = aggregate_scores(r);
  CHECK(*s.overlap == doctest::Approx(95.915).epsilon(1e-12));
  CHECK(*s.topology == doctest::Approx(70.24666666666667).epsilon(1e-12));

  r.branch_rate.reset();
  s = aggregate_scores(r);
  CHECK(s.overlap.has_value());
  CHECK_FALSE(s.topology.has_value());
}

TEST_CASE("property: rates are translation invariant") {
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const AvSynthTruth t = av_instance(s);
    const SwapResult sw = swap_labels(t, {0, 0, 40, 96});
    const MetricCounts a = evaluate_counts(sw.prediction, t.gt);

    AVGroundTruth moved;
    moved.arteriole = shift(t.gt.arteriole, 5, 9);
    moved.venule = shift(t.gt.venule, 5, 9);
    moved.vessel = shift(t.gt.vessel, 5, 9);
    moved.fov = shift(t.gt.fov, 5, 9);
    const PredictionMasks mp{shift(sw.prediction.arteriole, 5, 9), shift(sw.prediction.venule, 5, 9),
                             shift(sw.prediction.vessel, 5, 9)};
    const MetricCounts b = evaluate_counts(mp, moved);
    CHECK(a.av_all.tp == b.av_all.tp);
    CHECK(a.av_all.tn == b.av_all.tn);
    CHECK(a.av_centerline.n() == b.av_centerline.n());
    CHECK(a.branch.hit == b.branch.hit);
    CHECK(a.branch.total == b.branch.total);
    CHECK(a.tree_length.hit == b.tree_length.hit);
    CHECK(a.vessel.hit == b.vessel.hit);
  }
}

TEST_CASE("property: detection rates grow with the prediction and shrink with tau") {
  std::mt19937 rng(17);
  const AvSynthTruth t = av_instance(3);
  const Mask skel = thin(t.gt.vessel);
  const BranchLabeling b = branch_decompose(skel);
  Mask pred = Mask::Zero(96, 96);
  Index last_vessel = 0, last_tree = 0;
  for (int step = 0; step < 40; ++step) {
    for (int k = 0; k < 300; ++k) pred(rng() % 96, rng() % 96) = 1;
    const Index v = vessel_detection_rate(pred, t.gt).hit, tr = tree_length_rate(pred, skel).hit;
    CHECK(v >= last_vessel);
    CHECK(tr >= last_tree);
    last_vessel = v;
    last_tree = tr;
    Index last_branch = b.n_branches;
    for (double tau = 0.05; tau <= 1.0; tau += 0.05) {
      const Index hit = branch_detection_rate(pred, b, tau).hit;
      CHECK(hit <= last_branch);
      last_branch = hit;
    }
  }
}

TEST_CASE("property: pooling adds the backing counts") {
  MetricCounts pooled;
  Index tp = 0, branches = 0, vessel = 0;
  for (std::uint64_t s = 1; s <= 4; ++s) {
    const AvSynthTruth t = av_instance(s);
    const MetricCounts c = evaluate_counts(swap_labels(t, {0, 0, 96, 30}).prediction, t.gt);
    tp += c.av_all.tp;
    branches += c.branch.total;
    vessel += c.vessel.hit;
    pooled += c;
  }
  CHECK(pooled.av_all.tp == tp);
  CHECK(pooled.branch.total == branches);
  CHECK(pooled.vessel.hit == vessel);
  const MetricReport r = MetricReport::from_counts(pooled);
  CHECK(*r.vessel_rate == doctest::Approx(100.0 * pooled.vessel.hit / pooled.vessel.total));
  for (const auto& v : {r.f1_all, r.acc_all, r.f1_centerline, r.acc_centerline, r.branch_rate,
                        r.tree_length_rate, r.vessel_rate}) {
    REQUIRE(v.has_value());
    CHECK(*v >= 0.0);
    CHECK(*v <= 100.0);
  }
}

TEST_CASE("property: counts match per-pixel oracles on synthetic pairs") {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const AvSynthTruth t = av_instance(s);
    const SwapResult sw = swap_labels(t, {0, 0, 96, static_cast<int>(10 + 3 * s)});
    const MetricCounts c = evaluate_counts(sw.prediction, t.gt);
    CHECK(c.av_all.tp == sw.expected.tp);
    CHECK(c.av_all.fp == sw.expected.fp);
    CHECK(c.av_all.fn == sw.expected.fn);
    CHECK(c.av_all.tn == sw.expected.tn);

    // drop a stripe of the vessel prediction to make the rates nontrivial
    PredictionMasks cut = sw.prediction;
    cut.vessel.block(40, 0, 12, 96).setZero();
    const MetricCounts d = evaluate_counts(cut, t.gt);
    const Mask skel = thin(t.gt.vessel);
    const BranchLabeling b = branch_decompose(skel);
    const verify::Counted vessel = verify::count_covered(cut.vessel, t.gt.vessel);
    const verify::Counted tree = verify::count_covered(cut.vessel, skel);
    const verify::Counted branch = verify::count_detected_branches(cut.vessel, b.labels, b.n_branches, 0.8);
    CHECK(d.vessel.hit == vessel.hit);
    CHECK(d.vessel.total == vessel.total);
    CHECK(d.tree_length.hit == tree.hit);
    CHECK(d.tree_length.total == tree.total);
    CHECK(d.branch.hit == branch.hit);
    CHECK(d.branch.total == branch.total);
  }
}
