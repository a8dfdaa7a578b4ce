#include <vector>

#include "avtopo/skeletal.hpp"

namespace avtopo {

LabelRaster label_components(const Mask& m, int* n_components) {
  const Index rows = m.rows(), cols = m.cols();
  LabelRaster labels = LabelRaster::Zero(rows, cols);
  int n = 0;
  std::vector<Index> stack;
  for (Index start = 0; start < m.size(); ++start) {
    if (!m(start) || labels(start)) continue;
    labels(start) = ++n;
    stack.push_back(start);
    while (!stack.empty()) {
      const Index i = stack.back();
      stack.pop_back();
      const Index y = i / cols, x = i % cols;
      for (Index dy = -1; dy <= 1; ++dy)
        for (Index dx = -1; dx <= 1; ++dx) {
          const Index yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= rows || xx < 0 || xx >= cols) continue;
          if (m(yy, xx) && !labels(yy, xx)) {
            labels(yy, xx) = n;
            stack.push_back(yy * cols + xx);
          }
        }
    }
  }
  if (n_components) *n_components = n;
  return labels;
}

BranchLabeling branch_decompose(const Mask& skel) {
  BranchLabeling out;
  Mask junction = Mask::Zero(skel.rows(), skel.cols());
  for (Index i = 0; i < skel.size(); ++i) {
    if (!skel(i)) continue;
    const int n = neighbour_count(skel, i);
    if (n >= 3) {
      junction(i) = 1;
      out.junctions.push_back(i);
    } else if (n == 1) {
      out.endpoints.push_back(i);
    }
  }
  label_components(junction, &out.n_junction_nodes);

  const Mask branches = ((skel != 0) && (junction == 0)).cast<std::uint8_t>();
  out.labels = label_components(branches, &out.n_branches);
  out.branch_sizes.assign(static_cast<std::size_t>(out.n_branches), 0);
  for (Index i = 0; i < out.labels.size(); ++i)
    if (out.labels(i)) ++out.branch_sizes[static_cast<std::size_t>(out.labels(i) - 1)];
  return out;
}

}  // namespace avtopo
