#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include "avtopo/skeletal.hpp"

namespace avtopo {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Term {
  double weight;  // 1 for first order, 9/4 for second order
  double target;  // upwind estimate the solution must exceed
};

// Largest root of sum_k w_k (u - t_k)^2 = 1 using the smallest terms that stay
// upwind (u >= every t used). Returns +inf when no term is available.
double solve_quadratic(std::array<Term, 2> terms, int n) {
  std::sort(terms.begin(), terms.begin() + n,
            [](const Term& a, const Term& b) { return a.target < b.target; });
  double best = kInf;
  double a = 0.0, b = 0.0, c = -1.0;
  for (int k = 0; k < n; ++k) {
    a += terms[k].weight;
    b -= 2.0 * terms[k].weight * terms[k].target;
    c += terms[k].weight * terms[k].target * terms[k].target;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) break;
    const double u = (-b + std::sqrt(disc)) / (2.0 * a);
    if (u < terms[k].target) break;
    best = u;
  }
  return best;
}

}  // namespace

GeodesicField geodesic_distance(const Mask& mask, const Mask& seeds) {
  require_same_shape(mask, seeds, "geodesic_distance");
  const Index rows = mask.rows(), cols = mask.cols();

  GeodesicField field;
  field.dist = RasterD::Constant(rows, cols, kInf);
  field.reached = Mask::Zero(rows, cols);
  Mask& frozen = field.reached;
  RasterD& d = field.dist;

  using Entry = std::pair<double, Index>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (Index i = 0; i < mask.size(); ++i) {
    if (mask(i) && seeds(i)) {
      d(i) = 0.0;
      heap.emplace(0.0, i);
    }
  }
  require(!heap.empty(), ErrorKind::precondition, "geodesic_distance: seeds do not meet the mask");

  auto is_frozen = [&](Index y, Index x) {
    return y >= 0 && y < rows && x >= 0 && x < cols && frozen(y, x);
  };

  // Per axis: the smaller frozen neighbour, upgraded to a second-order term
  // when the sample two steps out on the same side is frozen and strictly
  // smaller (a flat pair, as along a seed line, is not an upwind profile).
  auto axis_term = [&](Index y, Index x, int dy, int dx, bool second_order, Term& out) {
    bool found = false;
    double best = kInf;
    for (int sign : {-1, 1}) {
      const Index y1 = y + sign * dy, x1 = x + sign * dx;
      if (!is_frozen(y1, x1) || d(y1, x1) >= best) continue;
      best = d(y1, x1);
      out = {1.0, best};
      const Index y2 = y1 + sign * dy, x2 = x1 + sign * dx;
      if (second_order && is_frozen(y2, x2) && d(y2, x2) < best)
        out = {2.25, (4.0 * best - d(y2, x2)) / 3.0};
      found = true;
    }
    return found;
  };

  auto update = [&](Index y, Index x) {
    for (bool second_order : {true, false}) {
      std::array<Term, 2> terms{};
      int n = 0;
      if (axis_term(y, x, 1, 0, second_order, terms[n])) ++n;
      if (axis_term(y, x, 0, 1, second_order, terms[n])) ++n;
      const double u = solve_quadratic(terms, n);
      if (std::isfinite(u)) return u;
    }
    return kInf;
  };

  constexpr int kDy[4] = {-1, 0, 0, 1};
  constexpr int kDx[4] = {0, -1, 1, 0};
  while (!heap.empty()) {
    const auto [value, i] = heap.top();
    heap.pop();
    if (frozen(i) || value > d(i)) continue;
    frozen(i) = 1;
    const Index y = i / cols, x = i % cols;
    for (int k = 0; k < 4; ++k) {
      const Index ny = y + kDy[k], nx = x + kDx[k];
      if (ny < 0 || ny >= rows || nx < 0 || nx >= cols) continue;
      if (!mask(ny, nx) || frozen(ny, nx)) continue;
      const double u = update(ny, nx);
      if (u < d(ny, nx)) {
        d(ny, nx) = u;
        heap.emplace(u, ny * cols + nx);
      }
    }
  }
  return field;
}

}  // namespace avtopo
