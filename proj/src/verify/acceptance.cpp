#include "avtopo/verify/acceptance.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <unistd.h>

#include "avtopo/cake.hpp"
#include "avtopo/image_io.hpp"
#include "avtopo/metrics.hpp"
#include "avtopo/parallel.hpp"
#include "avtopo/skeletal.hpp"
#include "avtopo/synth.hpp"
#include "avtopo/topoloss.hpp"
#include "avtopo/verify/oracles.hpp"

namespace avtopo::verify {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  const int n = std::snprintf(nullptr, 0, pattern, args...);
  std::string out(static_cast<std::size_t>(n) + 1, '\0');
  std::snprintf(out.data(), out.size(), pattern, args...);
  out.pop_back();
  return out;
}

// ---------------------------------------------------------------- 1

Outcome partition_of_unity() {
  CakeParams params;
  params.n_orientations = 24;
  params.design_size = 65;
  const CakeBank bank = build_bank(params);
  RasterD sum = bank.dc;
  double imag = 0.0;
  for (const ComplexRaster& s : bank.spectra) {
    sum += s.real();
    imag = std::max(imag, s.imag().abs().maxCoeff());
  }
  const double err = std::max((sum - radial_window_grid(params)).abs().maxCoeff(), imag);
  return {err <= 1e-9, fmt("max |sum + DC - M| = %.3g (tol 1e-9)", err)};
}

// ---------------------------------------------------------------- 2

Outcome orientation_selectivity() {
  const CakeBank bank = build_bank();
  const int n = bank.params.n_orientations;
  const int size = 41, c = size / 2;
  int correct = 0;
  std::string misses;
  for (int i = 0; i < n; ++i) {
    // A detector at bank angle theta responds to lines running perpendicular
    // to theta. The bank is symmetric under theta -> theta + pi, so the
    // orientation is judged modulo n / 2.
    const double direction = bank.thetas[static_cast<std::size_t>(i)] + std::numbers::pi / 2;
    const RasterD image = line_image(size, direction, 1.0, 0.5);
    const OrientationScores scores = orientation_scores(image, bank);
    const double ux = std::cos(direction), uy = std::sin(direction);
    std::vector<double> mean(static_cast<std::size_t>(n), 0.0);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const double dy = y - c, dx = x - c;
        if (std::abs(dx * uy - dy * ux) > 0.5 || std::hypot(dy, dx) > 12.0) continue;
        for (int j = 0; j < n; ++j) mean[static_cast<std::size_t>(j)] += scores.scores[static_cast<std::size_t>(j)](y, x);
      }
    const int best = static_cast<int>(std::max_element(mean.begin(), mean.end()) - mean.begin());
    if (best % (n / 2) == i % (n / 2)) ++correct;
    else misses += fmt(" %d->%d", i, best);
  }
  return {correct >= 22, fmt("%d/%d bank angles recovered (need >= 22)%s", correct, n,
                             misses.empty() ? "" : (", misses:" + misses).c_str())};
}

// ---------------------------------------------------------------- 3

Outcome gradient_correctness() {
  const GradCheckReport r = gradient_check({});
  return {r.max_relative_error <= 1e-4,
          fmt("max relative error %.3g over %ld gradients, %d instances (tol 1e-4)",
              r.max_relative_error, r.pixels, r.instances)};
}

// ---------------------------------------------------------------- 4

Outcome cldice_topology() {
  // 3 x 20 bar with a one-pixel margin; the skeleton is its middle row.
  const Index rows = 5, cols = 22;
  Mask g = Mask::Zero(rows, cols), skel = Mask::Zero(rows, cols);
  g.block(1, 1, 3, 20).setOnes();
  skel.block(2, 1, 1, 20).setOnes();
  const RasterD intact = g.cast<double>();
  RasterD gap = intact;
  gap.col(11).setZero();
  const double d_cl = cldice_loss(gap, g, skel) - cldice_loss(intact, g, skel);
  const double d_dice = dice_loss(gap, g) - dice_loss(intact, g);
  return {d_cl >= 10.0 * d_dice,
          fmt("delta clDice %.5f vs delta Dice %.5f, ratio %.2f (need >= 10)", d_cl, d_dice,
              d_cl / d_dice)};
}

// ---------------------------------------------------------------- 5

Outcome geodesic_accuracy() {
  double worst_rel = 0.0;
  long reached = 0;
  bool seeds_zero = true;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Maze maze = random_maze(1000 + s);
    const GeodesicField fmm = geodesic_distance(maze.mask, maze.seeds);
    const RasterD ref = chamfer_dijkstra(maze.mask, maze.seeds);
    for (Index i = 0; i < ref.size(); ++i) {
      if (!fmm.reached(i)) continue;
      ++reached;
      if (ref(i) == 0.0) {
        seeds_zero = seeds_zero && fmm.dist(i) == 0.0;
        continue;
      }
      worst_rel = std::max(worst_rel, std::abs(fmm.dist(i) - ref(i)) / ref(i));
    }
  }

  const int n = 50, c = 25;
  Mask seed = Mask::Zero(n, n);
  seed(c, c) = 1;
  const GeodesicField open = geodesic_distance(Mask::Ones(n, n), seed);
  double worst_abs = 0.0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double r = std::hypot(y - c, x - c);
      if (r <= 20.0) worst_abs = std::max(worst_abs, std::abs(open.dist(y, x) - r));
    }
  return {worst_rel <= 0.05 && worst_abs <= 0.4 && seeds_zero,
          fmt("mazes: max relative error %.4f over %ld reached pixels (tol 0.05)%s; "
              "open grid: max |d - r| %.3f px within r <= 20 (tol 0.4)",
              worst_rel, reached, seeds_zero ? "" : ", nonzero seed distance", worst_abs)};
}

// ---------------------------------------------------------------- 6

TreeSpec tree_spec(int s) {
  TreeSpec spec;
  spec.seed = static_cast<std::uint64_t>(s) + 1;
  spec.depth = 1 + s % 3;
  spec.widths = s % 2 ? std::vector<int>{3, 3, 2} : std::vector<int>{3, 2, 1};
  return spec;
}

AVGroundTruth truth_of(const Mask& vessel) {
  return {vessel, Mask::Zero(vessel.rows(), vessel.cols()), vessel,
          full_mask(vessel.rows(), vessel.cols())};
}

Perturbation scripted(const SynthTruth& truth, int s) {
  Perturbation op;
  op.kind = static_cast<Perturbation::Kind>(s % 3);
  op.branch = s % truth.n_branches;
  if (op.kind == Perturbation::Kind::gap) {
    // first branch from the scripted one that is long enough for the gap
    for (int k = 0; k < truth.n_branches; ++k) {
      const int b = (op.branch + k) % truth.n_branches;
      if (static_cast<int>(truth.branches[static_cast<std::size_t>(b)].pixels.size()) >=
          op.length + 2) {
        op.branch = b;
        break;
      }
    }
  }
  return op;
}

bool same(const RateCount& r, const Counted& c) { return r.hit == c.hit && r.total == c.total; }

Outcome metric_oracles() {
  const double tau = 0.8;
  int matched = 0, expected_ok = 0;
  std::string first_miss;
  for (int s = 0; s < 50; ++s) {
    const SynthTruth truth = generate(tree_spec(s));
    const PerturbResult pr = perturb(truth, scripted(truth, s));
    const Mask& pred = pr.prediction;
    const AVGroundTruth gt = truth_of(truth.mask);

    // Recorded truth.
    const RateCount tl = tree_length_rate(pred, truth.centerline);
    const RateCount vd = vessel_detection_rate(pred, gt);
    const RateCount bd = branch_detection_rate(pred, labeling_of(truth), tau);
    bool ok = same(tl, count_covered(pred, truth.centerline)) &&
              same(vd, count_covered(pred, truth.mask)) &&
              same(bd, count_detected_branches(pred, truth.branch_labels, truth.n_branches, tau));

    // Ground truth derived by thinning, as the metrics pipeline does it.
    const MetricCounts mc = evaluate_counts({pred, Mask::Zero(pred.rows(), pred.cols()), pred}, gt,
                                            {tau, false});
    const Mask skel = thin(truth.mask);
    const BranchLabeling bl = branch_decompose(skel);
    ok = ok && same(mc.tree_length, count_covered(pred, skel)) &&
         same(mc.vessel, count_covered(pred, truth.mask)) &&
         same(mc.branch, count_detected_branches(pred, bl.labels, bl.n_branches, tau));
    if (ok) ++matched;
    else if (first_miss.empty()) first_miss = fmt(", first mismatch at tree %d", s);

    const ExpectedDeltas& e = pr.expected;
    if (std::abs(*tl.rate() - e.tree_length_rate) < 1e-9 &&
        std::abs(*vd.rate() - e.vessel_rate) < 1e-9 &&
        std::abs(*bd.rate() - e.branch_rate(tau)) < 1e-9)
      ++expected_ok;
  }
  return {matched == 50 && expected_ok == 50,
          fmt("%d/50 trees match the counting oracles, %d/50 match the constructed deltas%s",
              matched, expected_ok, first_miss.c_str())};
}

// ---------------------------------------------------------------- 7

Outcome branch_recovery() {
  int recovered = 0;
  std::string misses;
  for (int s = 0; s < 50; ++s) {
    const SynthTruth truth = generate(tree_spec(s));
    const int found = branch_decompose(thin(truth.mask)).n_branches;
    if (found == truth.n_branches) ++recovered;
    else misses += fmt(" tree %d: %d vs %d;", s, found, truth.n_branches);
  }
  return {recovered == 50, fmt("%d/50 trees with the generated branch count (widths <= 3, "
                               "arms >= 8 px)%s", recovered, misses.c_str())};
}

// ---------------------------------------------------------------- 8

Outcome roc_sanity() {
  // 30 x 30 keeps every distinct value as a threshold, which the inversion
  // identity needs.
  const Index n = 30;
  const AVGroundTruth t = random_truth(77, n, n);
  const Mask& gt = t.arteriole;
  const Mask fov = full_mask(n, n);
  const RasterD p = distinct_probabilities(78, n, n, 0.0, 1.0);

  const auto perfect = roc(gt.cast<double>(), gt, fov).auc;
  const auto constant = roc(RasterD::Constant(n, n, 0.5), gt, fov).auc;
  const auto a = roc(p, gt, fov).auc;
  const auto b = roc(1.0 - p, gt, fov).auc;
  if (!perfect || !constant || !a || !b) return {false, "AUC undefined on a two-class instance"};
  const double e1 = std::abs(*perfect - 1.0), e2 = std::abs(*constant - 0.5),
               e3 = std::abs(*a + *b - 1.0);
  return {e1 <= 1e-12 && e2 <= 1e-12 && e3 <= 1e-12,
          fmt("|AUC(gt) - 1| = %.2g, |AUC(const) - 0.5| = %.2g, |AUC(p) + AUC(1-p) - 1| = %.2g "
              "(tol 1e-12)", e1, e2, e3)};
}

// ---------------------------------------------------------------- 9

Outcome aggregate_arithmetic() {
  struct Row {
    const char* name;
    double f1, acc, f1_cl, acc_cl, branch, tree, vessel;
    double overlap, topology;  // averages worked out by hand, 3 decimals
  };
  const Row rows[] = {
      {"baseline", 95.85, 95.98, 68.75, 55.88, 43.73, 56.73, 66.63, 95.915, 55.697},
      {"prior av model", 96.71, 96.78, 76.75, 66.65, 50.97, 66.61, 73.06, 96.745, 63.547},
      {"topology loss", 95.31, 94.97, 76.32, 68.99, 58.27, 72.13, 78.14, 95.140, 69.513},
      {"topology loss + cake", 95.87, 95.66, 76.84, 69.85, 59.96, 72.93, 77.85, 95.765, 70.247},
  };
  int ok = 0;
  std::string worst;
  for (const Row& r : rows) {
    MetricReport rep;
    rep.f1_all = r.f1;
    rep.acc_all = r.acc;
    rep.f1_centerline = r.f1_cl;
    rep.acc_centerline = r.acc_cl;
    rep.branch_rate = r.branch;
    rep.tree_length_rate = r.tree;
    rep.vessel_rate = r.vessel;
    const AggregateScores a = aggregate_scores(rep);
    if (a.overlap && a.topology && std::abs(*a.overlap - r.overlap) < 5e-4 &&
        std::abs(*a.topology - r.topology) < 5e-4)
      ++ok;
    else
      worst += fmt(" %s", r.name);
  }
  return {ok == 4, fmt("%d/4 published rows reproduce overlap and topology to 3 decimals%s", ok,
                       worst.c_str())};
}

// ---------------------------------------------------------------- 10

using Snapshot = std::map<std::string, std::string>;

Snapshot snapshot(const fs::path& root) {
  Snapshot files;
  if (!fs::exists(root)) return files;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file())
      files[fs::relative(entry.path(), root).generic_string()] = io::read_bytes(entry.path());
  return files;
}

Rgb<std::uint8_t> encode_prediction(const PredictionMasks& p) {
  return encode_rite_label({p.arteriole, p.venule, p.vessel, full_mask(p.vessel.rows(), p.vessel.cols())});
}

// Inputs for one pass over every subcommand.
void write_inputs(const fs::path& in) {
  fs::create_directories(in / "gt");
  fs::create_directories(in / "pred");
  fs::create_directories(in / "loss");

  TreeSpec artery, vein;
  artery.canvas_width = artery.canvas_height = vein.canvas_width = vein.canvas_height = 96;
  artery.depth = vein.depth = 1;
  artery.arm_length = vein.arm_length = 18;
  artery.root_x = 0.3;
  vein.root_x = 0.7;
  for (int k = 0; k < 2; ++k) {
    artery.seed = 11 + static_cast<std::uint64_t>(k);
    vein.seed = 21 + static_cast<std::uint64_t>(k);
    const AvSynthTruth av = generate_av(artery, vein);
    const std::string name = k ? "b.png" : "a.png";
    io::write_png_rgb8(in / "gt" / name, encode_rite_label(av.gt));
    const SwapResult swapped = swap_labels(av, {0, 0, 48, 96});
    io::write_png_rgb8(in / "pred" / name, encode_prediction(swapped.prediction));
    if (k) continue;

    io::write_png_rgb8(in / "label.png", encode_rite_label(av.gt));
    io::write_png_mask(in / "mask.png", av.gt.vessel);
    io::write_png_mask(in / "seeds.png", thin(av.gt.vessel));
    io::write_png_mask(in / "fov.png", av.gt.fov);

    // Fundus-like image: dark vessels on a tilted, reddish background.
    const Index n = av.gt.vessel.rows();
    Rgb<double> rgb;
    for (int ch = 0; ch < 3; ++ch) rgb[static_cast<std::size_t>(ch)] = RasterD(n, n);
    for (Index y = 0; y < n; ++y)
      for (Index x = 0; x < n; ++x) {
        const double ramp = 0.5 + 0.4 * static_cast<double>(x) / static_cast<double>(n);
        const double v = av.gt.vessel(y, x) ? 0.55 : 1.0;
        rgb[0](y, x) = ramp * v;
        rgb[1](y, x) = 0.5 * ramp * v;
        rgb[2](y, x) = 0.25 * ramp * v;
      }
    io::write_png_rgb(in / "fundus.png", rgb);

    SynthRng rng(31);
    RasterD prob(n, n);
    for (Index i = 0; i < prob.size(); ++i)
      prob(i) = std::clamp(0.7 * av.gt.vessel(i) + rng.uniform(0.0, 0.3), 0.0, 1.0);
    io::write_raw_f64(in / "prob.f64", prob);
    for (AvClass c : kAllClasses) {
      RasterD p(n, n);
      for (Index i = 0; i < p.size(); ++i)
        p(i) = std::clamp(0.8 * av.gt.channel(c)(i) + rng.uniform(0.05, 0.15), 0.0, 1.0);
      io::write_raw_f64(in / "loss" / (std::string(to_string(c)) + ".f64"), p);
    }
  }
}

std::vector<std::vector<std::string>> command_lines(const fs::path& in, const fs::path& out) {
  auto s = [](const fs::path& p) { return p.string(); };
  return {
      {"preprocess", "--in", s(in / "fundus.png"), "--out", s(out / "corrected.png"),
       "--enhanced", s(out / "enhanced.png")},
      {"cakebank", "--n", "24", "--size", "7", "--out-dir", s(out / "bank")},
      {"orientation-scores", "--image", s(in / "fundus.png"), "--bank", s(out / "bank"), "--out",
       s(out / "scores")},
      {"skeleton", "--in", s(in / "mask.png"), "--out", s(out / "skel.png"), "--labels",
       s(out / "branches.png")},
      {"geodist", "--mask", s(in / "mask.png"), "--seeds", s(in / "seeds.png"), "--out",
       s(out / "dist.f64"), "--cost-map", s(out / "alpha.f64")},
      {"loss", "--pred-dir", s(in / "loss"), "--gt", s(in / "label.png")},
      {"grad-check", "--instances", "3"},
      {"metrics", "--pred-dir", s(in / "pred"), "--gt-dir", s(in / "gt"), "--json",
       s(out / "metrics.json"), "--csv", s(out / "metrics.csv")},
      {"roc", "--pred", s(in / "prob.f64"), "--gt", s(in / "mask.png"), "--fov",
       s(in / "fov.png"), "--csv", s(out / "roc.csv")},
      {"synth", "--seed", "7", "--depth", "2", "--out-dir", s(out / "synth")},
      {"selftest", "--only", "1,8,9"},
  };
}

struct Pass {
  std::vector<int> codes;
  std::vector<std::string> stdouts;
  Snapshot files;
};

Outcome determinism(const CommandRunner& runner, const fs::path& work) {
  if (!runner) return {false, "no command runner available"};
  const fs::path in = work / "in", out = work / "out";
  write_inputs(in);
  const auto commands = command_lines(in, out);

  auto run_pass = [&](int jobs) {
    fs::remove_all(out);
    fs::create_directories(out);
    Pass pass;
    for (const auto& cmd : commands) {
      std::vector<std::string> args{"--jobs", std::to_string(jobs)};
      args.insert(args.end(), cmd.begin(), cmd.end());
      std::ostringstream o, e;
      pass.codes.push_back(runner(args, o, e));
      pass.stdouts.push_back(o.str());
    }
    pass.files = snapshot(out);
    return pass;
  };
  const Pass a = run_pass(1), b = run_pass(1), c = run_pass(8);

  std::string problems;
  for (std::size_t k = 0; k < commands.size(); ++k) {
    const std::string& name = commands[k][0];
    if (a.codes[k] != 0) problems += fmt(" %s exited %d;", name.c_str(), a.codes[k]);
    if (a.codes[k] != b.codes[k] || a.codes[k] != c.codes[k] || a.stdouts[k] != b.stdouts[k] ||
        a.stdouts[k] != c.stdouts[k])
      problems += fmt(" %s manifest differs;", name.c_str());
  }
  for (const auto& [path, bytes] : a.files) {
    const auto ib = b.files.find(path), ic = c.files.find(path);
    if (ib == b.files.end() || ic == c.files.end() || ib->second != bytes || ic->second != bytes)
      problems += fmt(" %s differs;", path.c_str());
  }
  if (a.files.size() != b.files.size() || a.files.size() != c.files.size())
    problems += " artifact sets differ;";
  return {problems.empty(),
          fmt("%zu subcommands, %zu artifacts, runs with --jobs 1, 1, 8 %s", commands.size(),
              a.files.size(), problems.empty() ? "byte-identical" : ("differ:" + problems).c_str())};
}

struct Criterion {
  int id;
  const char* name;
  std::optional<double> limit;  // seconds
};

const Criterion kCriteria[] = {
    {1, "cake partition of unity", 1.0},
    {2, "orientation selectivity", 10.0},
    {3, "gradient correctness", 30.0},
    {4, "clDice topology sensitivity", std::nullopt},
    {5, "geodesic accuracy", 10.0},
    {6, "metric oracle equivalence", 60.0},
    {7, "branch recovery", std::nullopt},
    {8, "roc sanity", std::nullopt},
    {9, "aggregate score arithmetic", std::nullopt},
    {10, "determinism", std::nullopt},
};

}  // namespace

AVGroundTruth random_truth(std::uint64_t seed, Index rows, Index cols) {
  SynthRng rng(seed);
  AVGroundTruth gt;
  gt.arteriole = Mask::Zero(rows, cols);
  gt.venule = Mask::Zero(rows, cols);
  gt.vessel = Mask::Zero(rows, cols);
  gt.fov = full_mask(rows, cols);
  for (Index i = 0; i < rows * cols; ++i) {
    const double u = rng.uniform(0.0, 1.0);
    if (u < 0.25) gt.arteriole(i) = 1;
    else if (u < 0.5) gt.venule(i) = 1;
    else if (u < 0.55) gt.arteriole(i) = gt.venule(i) = 1;
    else if (u < 0.6) gt.vessel(i) = 1;  // uncertain
    if (gt.arteriole(i) || gt.venule(i)) gt.vessel(i) = 1;
  }
  return gt;
}

GradCheckReport gradient_check(const GradCheckOptions& options, int jobs) {
  require(options.instances >= 1, ErrorKind::parameter, "instances must be >= 1");
  require(options.size >= 2, ErrorKind::parameter, "size must be >= 2");
  require(options.h > 0.0, ErrorKind::parameter, "h must be positive");
  options.config.validate();

  const auto n = static_cast<std::size_t>(options.instances);
  std::vector<GradCheckReport> parts(n);
  parallel_for(n, jobs, [&](std::size_t s) {
    const std::uint64_t seed = options.seed + s;
    const AVGroundTruth gt = random_truth(seed, options.size, options.size);
    const LossTargets targets = make_targets(gt);
    PerClass<RasterD> preds;
    for (AvClass c : kAllClasses)
      preds[c] = distinct_probabilities(3 * seed + static_cast<std::uint64_t>(c), options.size,
                                        options.size);
    const GateState state = s % 2 ? GateState::centerline_weighted : GateState::uniform;
    const PerClass<RasterD> analytic = loss_gradient(preds, targets, options.config, state);
    GradCheckReport& part = parts[s];
    part.instances = 1;
    for (AvClass c : kAllClasses) {
      auto f = [&](const RasterD& x) {
        PerClass<RasterD> moved = preds;
        moved[c] = x;
        return evaluate_loss(moved, targets, options.config, state).total;
      };
      const RasterD numeric = central_differences(f, preds[c], options.h);
      for (Index i = 0; i < numeric.size(); ++i) {
        const double a = analytic[c](i);
        if (std::abs(a) <= options.min_grad) continue;
        part.max_relative_error =
            std::max(part.max_relative_error, std::abs(a - numeric(i)) / std::abs(a));
        ++part.pixels;
      }
    }
  });
  GradCheckReport total;
  for (const GradCheckReport& p : parts) {
    total.max_relative_error = std::max(total.max_relative_error, p.max_relative_error);
    total.pixels += p.pixels;
    total.instances += p.instances;
  }
  return total;
}

std::vector<int> criterion_ids() {
  std::vector<int> ids;
  for (const Criterion& c : kCriteria) ids.push_back(c.id);
  return ids;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options, std::ostream& out,
                                            std::ostream& err) {
  for (int id : options.only)
    require(id >= 1 && id <= static_cast<int>(std::size(kCriteria)), ErrorKind::parameter,
            "selftest: no criterion " + std::to_string(id));

  std::vector<CriterionResult> results;
  for (const Criterion& c : kCriteria) {
    if (!options.only.empty() &&
        std::find(options.only.begin(), options.only.end(), c.id) == options.only.end())
      continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      switch (c.id) {
        case 1: o = partition_of_unity(); break;
        case 2: o = orientation_selectivity(); break;
        case 3: o = gradient_correctness(); break;
        case 4: o = cldice_topology(); break;
        case 5: o = geodesic_accuracy(); break;
        case 6: o = metric_oracles(); break;
        case 7: o = branch_recovery(); break;
        case 8: o = roc_sanity(); break;
        case 9: o = aggregate_arithmetic(); break;
        case 10: {
          static std::atomic<int> serial{0};
          fs::path work = options.work_dir;
          const bool own_work = work.empty();
          if (own_work)
            work = fs::temp_directory_path() / ("avtopo-selftest-" + std::to_string(::getpid()) +
                                                "-" + std::to_string(serial++));
          o = determinism(options.runner, work);
          if (own_work) fs::remove_all(work);
          break;
        }
      }
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CriterionResult r{c.id, c.name, o.pass, o.detail, seconds};
    if (c.limit && seconds >= *c.limit) {
      r.pass = false;
      r.detail += fmt("; over the %.0f s limit", *c.limit);
    }
    out << (r.pass ? "PASS" : "FAIL") << "  " << r.id << ". " << r.name << ": " << r.detail
        << "\n";
    out.flush();
    err << "criterion " << r.id << " took " << fmt("%.2f", seconds) << " s";
    if (c.limit) err << fmt(" (limit %.0f s)", *c.limit);
    err << "\n";
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace avtopo::verify
