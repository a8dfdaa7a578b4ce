#include <algorithm>
#include <array>
#include <cstdlib>

#include "avtopo/skeletal.hpp"

namespace avtopo {
namespace {

// Ring order P2..P9: N, NE, E, SE, S, SW, W, NW.
constexpr std::array<int, 8> kDy{-1, -1, 0, 1, 1, 1, 0, -1};
constexpr std::array<int, 8> kDx{0, 1, 1, 1, 0, -1, -1, -1};

std::array<bool, 8> ring(const Mask& m, Index y, Index x) {
  std::array<bool, 8> p{};
  for (int k = 0; k < 8; ++k) {
    const Index yy = y + kDy[k], xx = x + kDx[k];
    p[k] = yy >= 0 && yy < m.rows() && xx >= 0 && xx < m.cols() && m(yy, xx);
  }
  return p;
}

int count_set(const std::array<bool, 8>& p) {
  int b = 0;
  for (bool v : p) b += v;
  return b;
}

// Guo-Hall deletion test. Bits follow the ring order N, NE, E, SE, S, SW,
// W, NW; `pass` selects the subiteration.
bool guo_hall_candidate(const std::array<bool, 8>& p, int pass) {
  const bool n = p[0], ne = p[1], e = p[2], se = p[3], s = p[4], sw = p[5], w = p[6], nw = p[7];
  // Crossing number: 4-neighbours that are background while the next one or
  // two ring samples (counter-clockwise) are set.
  const int c = (!e && (ne || n)) + (!n && (nw || w)) + (!w && (sw || s)) + (!s && (se || e));
  if (c != 1) return false;
  const int n1 = (ne || e) + (nw || n) + (sw || w) + (se || s);
  const int n2 = (ne || n) + (nw || w) + (sw || s) + (se || e);
  const int m = std::min(n1, n2);
  if (m < 2 || m > 3) return false;
  if (pass == 0) return !((ne || n || !se) && e);
  return !((sw || s || !nw) && w);
}

// Simple point for (8, 4) connectivity: the foreground ring forms one
// 8-component and exactly one background 4-component touches the centre.
bool is_simple(const std::array<bool, 8>& p) {
  auto components = [&](bool value, bool eight) {
    std::array<int, 8> label{};
    label.fill(-1);
    int n = 0;
    bool touches_center = false;
    int touching = 0;
    for (int start = 0; start < 8; ++start) {
      if (p[start] != value || label[start] >= 0) continue;
      std::array<int, 8> stack{};
      int top = 0;
      stack[top++] = start;
      label[start] = n;
      touches_center = false;
      while (top > 0) {
        const int k = stack[--top];
        if (kDy[k] == 0 || kDx[k] == 0) touches_center = true;
        for (int j = 0; j < 8; ++j) {
          if (p[j] != value || label[j] >= 0) continue;
          const int dy = std::abs(kDy[j] - kDy[k]), dx = std::abs(kDx[j] - kDx[k]);
          const bool adjacent = eight ? (dy <= 1 && dx <= 1) : (dy + dx == 1);
          if (!adjacent) continue;
          label[j] = n;
          stack[top++] = j;
        }
      }
      ++n;
      touching += touches_center;
    }
    return eight ? n : touching;
  };
  return components(true, true) == 1 && components(false, false) == 1;
}

}  // namespace

int neighbour_count(const Mask& m, Index i) {
  return count_set(ring(m, i / m.cols(), i % m.cols()));
}

Mask thin(const Mask& mask) {
  Mask m = (mask != 0).cast<std::uint8_t>();
  const Index rows = m.rows(), cols = m.cols();

  // Guo-Hall subiterations; each deletes its candidates in parallel.
  std::vector<Index> marked;
  for (bool changed = true; changed;) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      marked.clear();
      for (Index y = 0; y < rows; ++y)
        for (Index x = 0; x < cols; ++x)
          if (m(y, x) && guo_hall_candidate(ring(m, y, x), pass)) marked.push_back(y * cols + x);
      for (Index i : marked) m(i) = 0;
      changed = changed || !marked.empty();
    }
  }

  // Staircase corners first: simple pixels with two orthogonal 4-neighbours.
  // Other simple pixels with two or more neighbours go only once no corner is
  // left, so a stroke is made one pixel wide before its tip is examined.
  auto sweep = [&](bool corners_only) {
    bool changed = false;
    for (Index y = 0; y < rows; ++y)
      for (Index x = 0; x < cols; ++x) {
        if (!m(y, x)) continue;
        const auto p = ring(m, y, x);
        if (count_set(p) < 2 || !is_simple(p)) continue;
        const bool corner = (p[0] || p[4]) && (p[2] || p[6]);
        if (corners_only && !corner) continue;
        m(y, x) = 0;
        changed = true;
      }
    return changed;
  };
  while (sweep(true) || sweep(false)) {
  }
  return m;
}

}  // namespace avtopo
