#include "doctest.h"
#include "support.hpp"

#include <cmath>
#include <random>

#include "avtopo/skeletal.hpp"
#include "avtopo/synth.hpp"
#include "avtopo/verify/oracles.hpp"

using namespace avtopo;

namespace {

// Either Zhang-Suen subiteration would delete pixel (y, x).
bool zhang_suen_deletable(const Mask& m, Index y, Index x) {
  const auto at = [&](Index yy, Index xx) -> int {
    return yy >= 0 && yy < m.rows() && xx >= 0 && xx < m.cols() && m(yy, xx) ? 1 : 0;
  };
  // P2..P9 clockwise from north
  const int p[8] = {at(y - 1, x),     at(y - 1, x + 1), at(y, x + 1), at(y + 1, x + 1),
                    at(y + 1, x),     at(y + 1, x - 1), at(y, x - 1), at(y - 1, x - 1)};
  int b = 0, a = 0;
  for (int i = 0; i < 8; ++i) {
    b += p[i];
    a += p[i] == 0 && p[(i + 1) % 8] == 1;
  }
  if (b < 2 || b > 6 || a != 1) return false;
  const int n = p[0], e = p[2], s = p[4], w = p[6];
  const bool first = n * e * s == 0 && e * s * w == 0;
  const bool second = n * e * w == 0 && n * s * w == 0;
  return first || second;
}

int components(const Mask& m) {
  int n = 0;
  label_components(m, &n);
  return n;
}

Mask random_blobs(unsigned seed, Index size) {
  std::mt19937 rng(seed);
  Mask m = Mask::Zero(size, size);
  for (int k = 0; k < 6; ++k) {
    const int cy = static_cast<int>(rng() % size), cx = static_cast<int>(rng() % size);
    const int r = 2 + static_cast<int>(rng() % 5);
    for (Index y = 0; y < size; ++y)
      for (Index x = 0; x < size; ++x)
        if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) m(y, x) = 1;
  }
  return m;
}

std::vector<Mask> thinning_corpus() {
  std::vector<Mask> out;
  for (unsigned s = 1; s <= 15; ++s) out.push_back(random_blobs(s, 40));
  for (std::uint64_t s = 1; s <= 5; ++s) {
    TreeSpec spec;
    spec.seed = s;
    spec.canvas_width = spec.canvas_height = 96;
    spec.depth = 2;
    out.push_back(generate(spec).mask);
  }
  return out;
}

Mask segment_mask(Index rows, Index cols, std::initializer_list<std::array<int, 4>> segments) {
  Mask m = Mask::Zero(rows, cols);
  for (const auto& s : segments) {
    const int n = std::max(std::abs(s[2] - s[0]), std::abs(s[3] - s[1]));
    for (int i = 0; i <= n; ++i)
      m(s[0] + (s[2] - s[0]) * i / std::max(n, 1), s[1] + (s[3] - s[1]) * i / std::max(n, 1)) = 1;
  }
  return m;
}

}  // namespace

TEST_CASE("thin examples") {
  const Mask line = segment_mask(5, 12, {{2, 1, 2, 10}});
  CHECK((thin(line) == line).all());

  Mask square = Mask::Zero(13, 13);
  square.block(2, 2, 9, 9).setOnes();
  const Mask s = thin(square);
  CHECK(s.count() >= 1);
  CHECK(s.count() <= 17);
  CHECK(((s != 0) && (square == 0)).count() == 0);
  CHECK(components(s) == 1);

  CHECK(thin(Mask::Zero(6, 6)).count() == 0);
}

TEST_CASE("property: thinning is a thin, idempotent, connectivity-preserving subset") {
  for (const Mask& m : thinning_corpus()) {
    const Mask t = thin(m);
    CHECK(((t != 0) && (m == 0)).count() == 0);
    CHECK((thin(t) == t).all());
    CHECK(components(t) == components(m));
    int deletable = 0;
    for (Index y = 0; y < t.rows(); ++y)
      for (Index x = 0; x < t.cols(); ++x) deletable += t(y, x) && zhang_suen_deletable(t, y, x);
    CHECK(deletable == 0);
  }
}

TEST_CASE("geodesic: corridor walls sit one step from the middle row") {
  const Mask corridor = Mask::Ones(3, 20);
  Mask seeds = Mask::Zero(3, 20);
  seeds.row(1).setOnes();
  const GeodesicField f = geodesic_distance(corridor, seeds);
  CHECK((f.dist.row(1) == 0.0).all());
  CHECK((f.dist.row(0) == 1.0).all());
  CHECK((f.dist.row(2) == 1.0).all());
  CHECK((f.reached == 1).all());
}

TEST_CASE("geodesic: open grid against Euclidean distance") {
  const Mask open = Mask::Ones(50, 50);
  Mask seed = Mask::Zero(50, 50);
  seed(25, 25) = 1;
  const GeodesicField f = geodesic_distance(open, seed);
  double worst = 0;
  for (Index y = 0; y < 50; ++y)
    for (Index x = 0; x < 50; ++x) {
      const double e = std::hypot(y - 25.0, x - 25.0);
      if (e <= 20) worst = std::max(worst, std::abs(f.dist(y, x) - e));
    }
  CHECK(worst <= 0.4);
}

TEST_CASE("geodesic: L corridor against chamfer Dijkstra") {
  // 5-px corridor running down, then right around the obstacle block.
  Mask m = Mask::Zero(40, 40);
  m.block(2, 2, 30, 5).setOnes();
  m.block(27, 2, 5, 36).setOnes();
  Mask seeds = Mask::Zero(40, 40);
  seeds.block(2, 2, 1, 5).setOnes();
  const GeodesicField f = geodesic_distance(m, seeds);
  const RasterD oracle = verify::chamfer_dijkstra(m, seeds);
  double worst = 0;
  for (Index i = 0; i < m.size(); ++i)
    if (m(i) && oracle(i) > 0) worst = std::max(worst, std::abs(f.dist(i) - oracle(i)) / oracle(i));
  CHECK(worst <= 0.05);
}

TEST_CASE("geodesic: seeds, reachability and errors") {
  const Mask m = support::mask_of({"###.##", "###.##"});
  const Mask seeds = support::mask_of({"#.....", "......"});
  const GeodesicField f = geodesic_distance(m, seeds);
  CHECK(f.dist(0, 0) == 0.0);
  CHECK(std::isinf(f.dist(0, 4)));
  CHECK(f.reached(0, 4) == 0);
  CHECK(f.reached(1, 2) == 1);
  CHECK(std::isinf(f.dist(0, 3)));

  try {
    geodesic_distance(m, support::mask_of({"...#..", "......"}));
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::precondition);
  }
}

TEST_CASE("property: geodesic field satisfies the triangle bound") {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const verify::Maze maze = verify::random_maze(s);
    const GeodesicField f = geodesic_distance(maze.mask, maze.seeds);
    const Mask& m = maze.mask;
    for (Index y = 0; y < m.rows(); ++y)
      for (Index x = 0; x < m.cols(); ++x) {
        if (!f.reached(y, x)) continue;
        CHECK(std::isfinite(f.dist(y, x)));
        CHECK((f.dist(y, x) == 0.0) == bool(maze.seeds(y, x)));
        const Index ny[] = {y - 1, y + 1, y, y}, nx[] = {x, x, x - 1, x + 1};
        for (int k = 0; k < 4; ++k) {
          if (ny[k] < 0 || ny[k] >= m.rows() || nx[k] < 0 || nx[k] >= m.cols()) continue;
          if (!f.reached(ny[k], nx[k])) continue;
          CHECK(f.dist(y, x) <= f.dist(ny[k], nx[k]) + 1.0 + 1e-9);
        }
      }
  }
}

TEST_CASE("branches: line, Y and plus") {
  const BranchLabeling line = branch_decompose(segment_mask(5, 14, {{2, 1, 2, 12}}));
  CHECK(line.n_branches == 1);
  CHECK(line.junctions.empty());
  CHECK(line.endpoints.size() == 2);

  // three 10-px arms from the center pixel (15, 15)
  const Mask y = segment_mask(32, 32, {{15, 15, 5, 15}, {15, 15, 22, 8}, {15, 15, 22, 22}});
  const BranchLabeling yb = branch_decompose(y);
  CHECK(yb.n_branches == 3);
  CHECK(yb.n_junction_nodes == 1);
  CHECK(yb.endpoints.size() == 3);

  const Mask plus = segment_mask(21, 21, {{10, 2, 10, 18}, {2, 10, 18, 10}});
  const BranchLabeling pb = branch_decompose(plus);
  CHECK(pb.n_branches == 4);
  CHECK(pb.n_junction_nodes == 1);
}

TEST_CASE("property: branch decomposition accounts for every pixel") {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    TreeSpec spec;
    spec.seed = s;
    spec.canvas_width = spec.canvas_height = 96;
    const Mask skel = thin(generate(spec).mask);
    const BranchLabeling b = branch_decompose(skel);

    Index total = 0;
    for (Index n : b.branch_sizes) total += n;
    CHECK(total + static_cast<Index>(b.junctions.size()) == skel.count());
    CHECK(static_cast<int>(b.branch_sizes.size()) == b.n_branches);
    CHECK(b.labels.maxCoeff() == b.n_branches);
    for (int label = 1; label <= b.n_branches; ++label) {
      const Mask piece = (b.labels == label).cast<std::uint8_t>();
      CHECK(piece.count() == b.branch_sizes[static_cast<std::size_t>(label - 1)]);
      CHECK(components(piece) == 1);
    }

    Mask shifted = Mask::Zero(skel.rows() + 7, skel.cols() + 3);
    shifted.block(7, 3, skel.rows(), skel.cols()) = skel;
    CHECK(branch_decompose(shifted).n_branches == b.n_branches);
  }
}
