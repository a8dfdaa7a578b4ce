#include <cmath>
#include <limits>
#include <map>
#include <queue>

#include "avtopo/synth.hpp"
#include "avtopo/verify/oracles.hpp"

namespace avtopo::verify {

RasterD chamfer_dijkstra(const Mask& mask, const Mask& seeds) {
  const Index rows = mask.rows(), cols = mask.cols();
  RasterD d = RasterD::Constant(rows, cols, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, Index>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (Index i = 0; i < mask.size(); ++i)
    if (mask(i) && seeds(i)) {
      d(i) = 0.0;
      pq.emplace(0.0, i);
    }
  while (!pq.empty()) {
    auto [di, i] = pq.top();
    pq.pop();
    if (di > d(i)) continue;
    const Index y = i / cols, x = i % cols;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (!dy && !dx) continue;
        const Index yy = y + dy, xx = x + dx;
        if (yy < 0 || yy >= rows || xx < 0 || xx >= cols || !mask(yy, xx)) continue;
        const double nd = di + ((dy && dx) ? std::sqrt(2.0) : 1.0);
        if (nd < d(yy, xx)) {
          d(yy, xx) = nd;
          pq.emplace(nd, yy * cols + xx);
        }
      }
  }
  return d;
}

Maze random_maze(std::uint64_t seed, int size, int pitch, int corridor) {
  SynthRng rng(seed);
  const int n = (size - 2 - pitch) / pitch;
  Maze m{Mask::Zero(size, size), Mask::Zero(size, size)};
  auto carve = [&](int y0, int x0, int h, int w) { m.mask.block(y0, x0, h, w).setOnes(); };
  auto oy = [&](int c) { return 1 + c * pitch; };
  auto ox = [&](int c) { return 1 + pitch + c * pitch; };

  std::vector<char> seen(static_cast<std::size_t>(n * n), 0);
  std::vector<std::pair<int, int>> stack{{0, 0}};
  seen[0] = 1;
  carve(oy(0), 1, corridor, pitch + corridor);  // entrance passage into cell (0,0)
  while (!stack.empty()) {
    const auto [cy, cx] = stack.back();
    std::vector<std::pair<int, int>> next;
    for (auto [dy, dx] : {std::pair{-1, 0}, {0, -1}, {0, 1}, {1, 0}}) {
      const int ny = cy + dy, nx = cx + dx;
      if (ny >= 0 && ny < n && nx >= 0 && nx < n && !seen[ny * n + nx]) next.emplace_back(ny, nx);
    }
    if (next.empty()) {
      stack.pop_back();
      continue;
    }
    const auto pick = static_cast<std::size_t>(rng.uniform(0.0, static_cast<double>(next.size())));
    const auto [ny, nx] = next[std::min(pick, next.size() - 1)];
    seen[ny * n + nx] = 1;
    const int y0 = oy(std::min(cy, ny)), x0 = ox(std::min(cx, nx));
    if (ny != cy) carve(y0, x0, pitch + corridor, corridor);
    else carve(y0, x0, corridor, pitch + corridor);
    stack.emplace_back(ny, nx);
  }
  m.seeds.block(oy(0), 1, corridor, 1).setOnes();
  return m;
}

RasterD central_differences(const std::function<double(const RasterD&)>& f, const RasterD& x,
                            double h) {
  RasterD g(x.rows(), x.cols());
  RasterD probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

Counted count_covered(const Mask& pred, const Mask& reference) {
  Counted c;
  for (Index y = 0; y < reference.rows(); ++y)
    for (Index x = 0; x < reference.cols(); ++x)
      if (reference(y, x)) {
        ++c.total;
        if (pred(y, x)) ++c.hit;
      }
  return c;
}

Counted count_detected_branches(const Mask& pred, const LabelRaster& labels, int n_branches,
                                double tau) {
  std::map<int, std::pair<long, long>> tally;  // label -> (covered, size)
  for (Index y = 0; y < labels.rows(); ++y)
    for (Index x = 0; x < labels.cols(); ++x) {
      const int l = labels(y, x);
      if (l <= 0) continue;
      auto& t = tally[l];
      ++t.second;
      if (pred(y, x)) ++t.first;
    }
  Counted c{0, n_branches};
  for (const auto& [label, t] : tally)
    if (t.first * 1.0 >= tau * t.second - 1e-9) ++c.hit;
  return c;
}

RasterD line_image(int size, double direction, double sigma, double contrast) {
  RasterD img(size, size);
  const double c = (size - 1) / 2.0;
  const double ny = std::cos(direction), nx = -std::sin(direction);  // unit normal
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double d = (y - c) * ny + (x - c) * nx;
      img(y, x) = 1.0 - contrast * std::exp(-d * d / (2.0 * sigma * sigma));
    }
  return img;
}

RasterD distinct_probabilities(std::uint64_t seed, Index rows, Index cols, double lo, double hi) {
  const Index n = rows * cols;
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  SynthRng rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    const auto j = std::min<Index>(i, static_cast<Index>(rng.uniform(0.0, static_cast<double>(i + 1))));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  RasterD p(rows, cols);
  for (Index i = 0; i < n; ++i)
    p(i) = lo + (hi - lo) * (static_cast<double>(order[static_cast<std::size_t>(i)]) + 0.5) /
                    static_cast<double>(n);
  return p;
}

}  // namespace avtopo::verify
