#include <vector>

#include "avtopo/topoloss.hpp"

namespace avtopo {
namespace {

struct Pooled {
  RasterD value;
  Raster<Index> arg;  // linear index of the selected neighbour
};

// Cross-shaped pooling. Neighbours are visited in row-major order (up, left,
// centre, right, down) and replaced only on strict improvement.
Pooled cross_pool(const RasterD& p, bool take_min) {
  const Index rows = p.rows(), cols = p.cols();
  Pooled out{RasterD(rows, cols), Raster<Index>(rows, cols)};
  constexpr int kDy[5] = {-1, 0, 0, 0, 1};
  constexpr int kDx[5] = {0, -1, 0, 1, 0};
  for (Index y = 0; y < rows; ++y)
    for (Index x = 0; x < cols; ++x) {
      double best = 0.0;
      Index arg = -1;
      for (int k = 0; k < 5; ++k) {
        const Index yy = y + kDy[k], xx = x + kDx[k];
        if (yy < 0 || yy >= rows || xx < 0 || xx >= cols) continue;
        const double v = p(yy, xx);
        if (arg < 0 || (take_min ? v < best : v > best)) {
          best = v;
          arg = yy * cols + xx;
        }
      }
      out.value(y, x) = best;
      out.arg(y, x) = arg;
    }
  return out;
}

void scatter_add(RasterD& dst, const Raster<Index>& arg, const RasterD& grad) {
  for (Index i = 0; i < grad.size(); ++i) dst(arg(i)) += grad(i);
}

// Forward pass of the soft skeleton with everything the backward pass needs.
struct SkeletonTape {
  std::vector<RasterD> x;       // x[0] = p, x[j+1] = erode(x[j])
  std::vector<Pooled> erosion;  // erosion[j] produces x[j+1]
  std::vector<Pooled> dilation; // dilation[j] = dilate(x[j+1]) = open(x[j])
  std::vector<RasterD> delta;   // relu(x[j] - open(x[j]))
  std::vector<RasterD> skel;    // running skeleton after level j
};

SkeletonTape record(const RasterD& p, int k) {
  SkeletonTape t;
  t.x.push_back(p);
  for (int j = 0; j <= k; ++j) {
    t.erosion.push_back(cross_pool(t.x[j], true));
    t.x.push_back(t.erosion[j].value);
    t.dilation.push_back(cross_pool(t.x[j + 1], false));
    t.delta.push_back((t.x[j] - t.dilation[j].value).max(0.0));
    if (j == 0) t.skel.push_back(t.delta[0]);
    else t.skel.push_back(t.skel[j - 1] + t.delta[j] * (1.0 - t.skel[j - 1]));
  }
  return t;
}

}  // namespace

void SoftSkelParams::validate() const {
  require(k >= 1, ErrorKind::parameter, "soft skeleton iterations k must be >= 1");
  require(epsilon > 0.0, ErrorKind::parameter, "epsilon must be positive");
}

RasterD soft_erode(const RasterD& p) { return cross_pool(p, true).value; }
RasterD soft_dilate(const RasterD& p) { return cross_pool(p, false).value; }
RasterD soft_open(const RasterD& p) { return soft_dilate(soft_erode(p)); }

RasterD soft_skeleton(const RasterD& p, const SoftSkelParams& params) {
  params.validate();
  return record(p, params.k).skel.back();
}

RasterD soft_skeleton_vjp(const RasterD& p, const SoftSkelParams& params,
                          const RasterD& upstream) {
  params.validate();
  require_same_shape(p, upstream, "soft_skeleton_vjp");
  const int k = params.k;
  const SkeletonTape t = record(p, k);

  // Unroll skel_j = skel_{j-1} + delta_j (1 - skel_{j-1}).
  std::vector<RasterD> g_delta(static_cast<std::size_t>(k) + 1);
  RasterD g_skel = upstream;
  for (int j = k; j >= 1; --j) {
    g_delta[j] = g_skel * (1.0 - t.skel[j - 1]);
    g_skel = g_skel * (1.0 - t.delta[j]);
  }
  g_delta[0] = g_skel;

  const Index rows = p.rows(), cols = p.cols();
  RasterD g_next = RasterD::Zero(rows, cols);  // gradient w.r.t. x[j+1]
  for (int j = k; j >= 0; --j) {
    const RasterD active = (t.x[j] - t.dilation[j].value > 0.0).cast<double>();
    const RasterD g_relu = g_delta[j] * active;

    RasterD g_eroded = g_next;  // x[j+1] feeds level j+1 and the opening at level j
    scatter_add(g_eroded, t.dilation[j].arg, -g_relu);

    RasterD g_x = g_relu;
    scatter_add(g_x, t.erosion[j].arg, g_eroded);
    g_next = std::move(g_x);
  }
  return g_next;
}

}  // namespace avtopo
