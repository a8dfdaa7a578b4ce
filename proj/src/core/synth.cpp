#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <tuple>

#include "avtopo/synth.hpp"

namespace avtopo {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Point {
  double y, x;
};

double distance(Pixel a, Pixel b) { return std::hypot(a.y - b.y, a.x - b.x); }

bool touching(Pixel a, Pixel b) { return std::abs(a.y - b.y) <= 1 && std::abs(a.x - b.x) <= 1; }

// Rounded path with repeats dropped and staircase corners removed, so the
// result is an 8-connected curve without redundant pixels.
std::vector<Pixel> pixel_path(const std::vector<Point>& pts) {
  std::vector<Pixel> path;
  for (const Point& p : pts) {
    const Pixel q{static_cast<int>(std::lround(p.y)), static_cast<int>(std::lround(p.x))};
    if (path.empty() || path.back() != q) path.push_back(q);
  }
  std::vector<Pixel> thin;
  for (const Pixel& q : path) {
    while (thin.size() >= 2 && touching(thin[thin.size() - 2], q)) thin.pop_back();
    thin.push_back(q);
  }
  return thin;
}

void stamp(Mask& mask, Pixel c, int width) {
  const double r2 = width * width / 4.0;
  const int r = width / 2 + 1;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      if (dy * dy + dx * dx > r2) continue;
      const int y = c.y + dy, x = c.x + dx;
      if (y >= 0 && y < mask.rows() && x >= 0 && x < mask.cols()) mask(y, x) = 1;
    }
}

// Disks of neighbouring arms can leave enclosed background pixels next to a
// junction; a tree mask has none.
void fill_holes(Mask& mask) {
  const Index rows = mask.rows(), cols = mask.cols();
  Mask outside = Mask::Zero(rows, cols);
  std::deque<Pixel> queue;
  auto push = [&](int y, int x) {
    if (y < 0 || y >= rows || x < 0 || x >= cols || mask(y, x) || outside(y, x)) return;
    outside(y, x) = 1;
    queue.push_back({y, x});
  };
  for (int y = 0; y < rows; ++y) push(y, 0), push(y, static_cast<int>(cols) - 1);
  for (int x = 0; x < cols; ++x) push(0, x), push(static_cast<int>(rows) - 1, x);
  while (!queue.empty()) {
    const Pixel p = queue.front();
    queue.pop_front();
    push(p.y - 1, p.x), push(p.y + 1, p.x), push(p.y, p.x - 1), push(p.y, p.x + 1);
  }
  mask = (outside == 0).cast<std::uint8_t>();
}

struct Arm {
  Point start;
  double heading;
  int level;
  int parent;
};

class TreeBuilder {
 public:
  TreeBuilder(const TreeSpec& spec, SynthRng& rng) : spec_(spec), rng_(rng) {}

  // Returns false when an arm could not be placed.
  bool build(SynthTruth& truth) {
    branches_.clear();
    occupied_ = Mask::Zero(spec_.canvas_height, spec_.canvas_width);
    const int w0 = spec_.width_at(0);
    const Point root{spec_.canvas_height - 1.0 - margin(w0),
                     std::round(spec_.root_x * (spec_.canvas_width - 1))};
    std::deque<Arm> queue{{root, -std::numbers::pi / 2, 0, -1}};
    while (!queue.empty()) {
      const Arm arm = queue.front();
      queue.pop_front();
      std::vector<Point> pts;
      if (!place(arm, truth, pts)) return false;
      if (arm.level < spec_.depth) {
        const Point end = pts.back();
        const double h = heading_at(pts);
        const int id = static_cast<int>(branches_.size()) - 1;
        queue.push_back({end, h - rng_.uniform(spec_.min_angle, spec_.max_angle) * kDeg,
                         arm.level + 1, id});
        queue.push_back({end, h + rng_.uniform(spec_.min_angle, spec_.max_angle) * kDeg,
                         arm.level + 1, id});
      }
    }
    return true;
  }

  std::vector<Branch> take() { return std::move(branches_); }

 private:
  static double margin(int width) { return width / 2 + 2.0; }

  static double heading_at(const std::vector<Point>& pts) {
    const Point& a = pts[pts.size() - 2];
    const Point& b = pts.back();
    return std::atan2(b.y - a.y, b.x - a.x);
  }

  bool place(const Arm& arm, SynthTruth& truth, std::vector<Point>& pts) {
    for (int attempt = 0; attempt <= spec_.max_retries; ++attempt) {
      if (attempt > 0) ++truth.redraws;
      const double mean = spec_.arm_length * std::pow(spec_.arm_decay, arm.level);
      const int length = std::max(
          spec_.min_arm,
          static_cast<int>(std::lround(mean + rng_.uniform(-spec_.arm_jitter, spec_.arm_jitter))));
      pts.assign(1, arm.start);
      double h = arm.heading;
      for (int s = 0; s < length; ++s) {
        pts.push_back({pts.back().y + std::sin(h), pts.back().x + std::cos(h)});
        h += rng_.uniform(-spec_.bend, spec_.bend);
      }
      Branch b{pixel_path(pts), arm.level, arm.parent, spec_.width_at(arm.level)};
      if (arm.parent >= 0) b.pixels.erase(b.pixels.begin());  // shared junction
      if (static_cast<int>(b.pixels.size()) < spec_.min_arm || !fits(b, arm)) continue;
      for (const Pixel& p : b.pixels) occupied_(p.y, p.x) = 1;
      branches_.push_back(std::move(b));
      return true;
    }
    return false;
  }

  bool related(const Branch& other, int other_id, const Arm& arm) const {
    return other_id == arm.parent || (arm.parent >= 0 && other.parent == arm.parent);
  }

  bool fits(const Branch& b, const Arm& arm) const {
    const double m = margin(b.width);
    for (const Pixel& p : b.pixels) {
      if (p.y < m || p.x < m || p.y > spec_.canvas_height - 1 - m ||
          p.x > spec_.canvas_width - 1 - m || occupied_(p.y, p.x))
        return false;
    }
    const Pixel junction{static_cast<int>(std::lround(arm.start.y)),
                         static_cast<int>(std::lround(arm.start.x))};
    for (std::size_t id = 0; id < branches_.size(); ++id) {
      const Branch& other = branches_[id];
      const bool near_ok = related(other, static_cast<int>(id), arm);
      const double need = spec_.clearance + (b.width + other.width) / 2.0;
      // Arms sharing the junction may approach each other only inside this
      // radius, where their headings still diverge.
      const double exempt = near_ok ? need / std::sin(2 * spec_.min_angle * kDeg) + 1.0 : 0.0;
      for (const Pixel& p : b.pixels) {
        const bool p_near = distance(p, junction) < exempt;
        for (const Pixel& q : other.pixels) {
          if (p_near && distance(q, junction) < exempt) continue;
          if (distance(p, q) < need) return false;
        }
      }
    }
    return true;
  }

  const TreeSpec& spec_;
  SynthRng& rng_;
  std::vector<Branch> branches_;
  Mask occupied_;
};

}  // namespace

int TreeSpec::width_at(int level) const {
  return widths[std::min<std::size_t>(static_cast<std::size_t>(level), widths.size() - 1)];
}

void TreeSpec::validate() const {
  require(depth >= 0, ErrorKind::parameter, "depth must be >= 0");
  require(depth <= 8, ErrorKind::parameter, "depth must be <= 8");
  require(!widths.empty(), ErrorKind::parameter, "widths must not be empty");
  for (int w : widths) require(w >= 1, ErrorKind::parameter, "widths must be >= 1");
  require(arm_length >= 1.0 && arm_jitter >= 0.0 && arm_decay > 0.0, ErrorKind::parameter,
          "arm length, jitter and decay must be positive");
  require(bend >= 0.0, ErrorKind::parameter, "bend must be >= 0");
  require(min_angle > 0.0 && min_angle <= max_angle && max_angle < 90.0, ErrorKind::parameter,
          "branch angles must satisfy 0 < min_angle <= max_angle < 90");
  require(min_arm >= 2, ErrorKind::parameter, "min_arm must be >= 2");
  require(clearance >= 0.0, ErrorKind::parameter, "clearance must be >= 0");
  require(canvas_width >= 8 && canvas_height >= 8, ErrorKind::parameter,
          "canvas must be at least 8x8");
  require(root_x > 0.0 && root_x < 1.0, ErrorKind::parameter, "root_x must lie in (0,1)");
  require(max_retries >= 0 && max_restarts >= 0, ErrorKind::parameter,
          "retry budgets must be >= 0");
}

SynthTruth generate(const TreeSpec& spec) {
  spec.validate();
  SynthRng rng(spec.seed);
  SynthTruth truth;
  truth.spec = spec;
  TreeBuilder builder(spec, rng);
  while (!builder.build(truth)) {
    if (++truth.restarts > spec.max_restarts)
      fail(ErrorKind::generation, "tree of depth " + std::to_string(spec.depth) +
                                      " does not fit a " +
                                      shape_string(spec.canvas_height, spec.canvas_width) +
                                      " canvas (seed " + std::to_string(spec.seed) + ")");
  }
  truth.branches = builder.take();
  truth.n_branches = static_cast<int>(truth.branches.size());

  const Index rows = spec.canvas_height, cols = spec.canvas_width;
  truth.mask = Mask::Zero(rows, cols);
  truth.centerline = Mask::Zero(rows, cols);
  truth.branch_labels = LabelRaster::Zero(rows, cols);
  for (std::size_t b = 0; b < truth.branches.size(); ++b) {
    const Branch& br = truth.branches[b];
    for (const Pixel& p : br.pixels) {
      truth.centerline(p.y, p.x) = 1;
      truth.branch_labels(p.y, p.x) = static_cast<int>(b) + 1;
      stamp(truth.mask, p, br.width);
    }
  }
  fill_holes(truth.mask);
  return truth;
}

BranchLabeling labeling_of(const SynthTruth& truth) {
  BranchLabeling out;
  out.labels = truth.branch_labels;
  out.n_branches = truth.n_branches;
  for (const Branch& b : truth.branches) out.branch_sizes.push_back(static_cast<Index>(b.pixels.size()));
  return out;
}

double ExpectedDeltas::branch_rate(double tau) const {
  if (n_branches == 0) return 0.0;
  int detected = n_branches;
  if (target >= 0 && static_cast<double>(target_remaining) <
                         tau * static_cast<double>(target_size) - 1e-9)
    --detected;
  return 100.0 * detected / n_branches;
}

PerturbResult perturb(const SynthTruth& truth, const Perturbation& op) {
  PerturbResult out{truth.mask, {}};
  ExpectedDeltas& e = out.expected;
  e.n_branches = truth.n_branches;
  const Index n_center = count(truth.centerline), n_mask = count(truth.mask);
  if (op.kind == Perturbation::Kind::identity) return out;

  require(op.branch >= 0 && op.branch < truth.n_branches, ErrorKind::parameter,
          "perturb: branch index " + std::to_string(op.branch) + " out of range [0, " +
              std::to_string(truth.n_branches) + ")");
  const Branch& target = truth.branches[static_cast<std::size_t>(op.branch)];
  const int size = static_cast<int>(target.pixels.size());
  int first = 0, last = size;
  if (op.kind == Perturbation::Kind::gap) {
    require(op.length >= 1 && op.length + 2 <= size, ErrorKind::parameter,
            "perturb: gap length " + std::to_string(op.length) + " does not fit branch of " +
                std::to_string(size) + " pixels");
    first = (size - op.length) / 2;
    last = first + op.length;
  }

  // Owner of every centerline pixel: (branch, position along it).
  const Index rows = truth.mask.rows(), cols = truth.mask.cols();
  Raster<int> owner_branch = Raster<int>::Constant(rows, cols, -1);
  Raster<int> owner_pos = Raster<int>::Zero(rows, cols);
  int max_width = 1;
  for (std::size_t b = 0; b < truth.branches.size(); ++b) {
    max_width = std::max(max_width, truth.branches[b].width);
    for (std::size_t k = 0; k < truth.branches[b].pixels.size(); ++k) {
      const Pixel& p = truth.branches[b].pixels[k];
      owner_branch(p.y, p.x) = static_cast<int>(b);
      owner_pos(p.y, p.x) = static_cast<int>(k);
    }
  }

  const int r = max_width / 2 + 1;
  for (Index y = 0; y < rows; ++y)
    for (Index x = 0; x < cols; ++x) {
      if (!truth.mask(y, x)) continue;
      std::tuple<int, int, int> best{1 << 30, 0, 0};
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const Index yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= rows || xx < 0 || xx >= cols || owner_branch(yy, xx) < 0) continue;
          best = std::min(best, {dy * dy + dx * dx, owner_branch(yy, xx), owner_pos(yy, xx)});
        }
      const auto [d2, b, k] = best;
      if (d2 == (1 << 30)) continue;
      if (b == op.branch && k >= first && k < last) {
        out.prediction(y, x) = 0;
        ++e.mask_removed;
      }
    }

  e.centerline_removed = last - first;
  e.target = op.branch;
  e.target_size = size;
  e.target_remaining = size - (last - first);
  e.tree_length_rate = 100.0 * static_cast<double>(n_center - e.centerline_removed) /
                       static_cast<double>(n_center);
  e.vessel_rate =
      100.0 * static_cast<double>(n_mask - e.mask_removed) / static_cast<double>(n_mask);
  return out;
}

AvSynthTruth generate_av(const TreeSpec& artery, const TreeSpec& vein) {
  require(artery.canvas_width == vein.canvas_width && artery.canvas_height == vein.canvas_height,
          ErrorKind::parameter, "artery and vein trees need the same canvas");
  AvSynthTruth out{generate(artery), generate(vein), {}};
  out.gt.arteriole = out.artery.mask;
  out.gt.venule = out.vein.mask;
  out.gt.vessel = ((out.artery.mask != 0) || (out.vein.mask != 0)).cast<std::uint8_t>();
  out.gt.fov = full_mask(artery.canvas_height, artery.canvas_width);
  return out;
}

SwapResult swap_labels(const AvSynthTruth& truth, const Rect& region) {
  const AVGroundTruth& gt = truth.gt;
  SwapResult out;
  out.prediction = {gt.arteriole, gt.venule, gt.vessel};
  for (int y = std::max(0, region.y0); y < std::min<int>(region.y1, gt.vessel.rows()); ++y)
    for (int x = std::max(0, region.x0); x < std::min<int>(region.x1, gt.vessel.cols()); ++x)
      std::swap(out.prediction.arteriole(y, x), out.prediction.venule(y, x));

  for (Index y = 0; y < gt.vessel.rows(); ++y)
    for (Index x = 0; x < gt.vessel.cols(); ++x) {
      const bool a = gt.arteriole(y, x), v = gt.venule(y, x);
      if (a == v) continue;  // crossing or background
      const bool inside = y >= region.y0 && y < region.y1 && x >= region.x0 && x < region.x1;
      if (inside) {
        ++out.swapped;
        a ? ++out.expected.fn : ++out.expected.fp;
      } else {
        a ? ++out.expected.tp : ++out.expected.tn;
      }
    }
  return out;
}

}  // namespace avtopo
