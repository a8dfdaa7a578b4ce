#pragma once

#include <vector>

#include "avtopo/raster.hpp"

namespace avtopo {

/// Two-subiteration parallel thinning (Guo-Hall deletion rules) followed by
/// removal of the remaining simple pixels with two or more neighbours,
/// staircase corners first. Every 8-connected component keeps a connected,
/// one pixel wide centerline, and no output pixel is deletable by the
/// Zhang-Suen tests.
Mask thin(const Mask& mask);

/// Number of set pixels among the 8 neighbours of linear index i.
int neighbour_count(const Mask& m, Index i);

struct GeodesicField {
  RasterD dist;  ///< +inf where not reached
  Mask reached;
};

/// Fast marching on the 4-neighbour grid with unit speed inside `mask`,
/// second-order upwind differences where two frozen samples are available on
/// an axis (first order otherwise). Heap ties are broken by row-major index.
/// Throws ErrorKind::precondition when seeds and mask do not intersect.
GeodesicField geodesic_distance(const Mask& mask, const Mask& seeds);

struct BranchLabeling {
  LabelRaster labels;               ///< 0 off-skeleton and on junctions, 1..n on branches
  int n_branches = 0;
  std::vector<Index> junctions;     ///< pixels with >= 3 skeleton neighbours
  std::vector<Index> endpoints;     ///< pixels with exactly 1 skeleton neighbour
  int n_junction_nodes = 0;         ///< junction pixels merged by 8-adjacency
  std::vector<Index> branch_sizes;  ///< pixel count per label, index 0 = label 1
};

/// Junctions are removed and the remaining skeleton pixels are split into
/// 8-connected components, labelled in row-major order of discovery.
BranchLabeling branch_decompose(const Mask& skel);

/// 8-connected component labels (row-major discovery order) of a binary mask.
LabelRaster label_components(const Mask& m, int* n_components = nullptr);

}  // namespace avtopo
