#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "avtopo/raster.hpp"

// Reference implementations used only to check the library. Each one is
// written the slow, obvious way and shares no code with what it checks.
namespace avtopo::verify {

/// 8-neighbour Dijkstra with steps 1 and sqrt(2), restricted to `mask`.
RasterD chamfer_dijkstra(const Mask& mask, const Mask& seeds);

/// Corridor maze on a size x size canvas: a random spanning tree over a grid
/// of cells carved with corridors `corridor` pixels wide, entered through a
/// straight passage one pitch long. `seeds` is the dead-end cross-section of
/// that passage.
struct Maze {
  Mask mask;
  Mask seeds;
};
Maze random_maze(std::uint64_t seed, int size = 50, int pitch = 8, int corridor = 4);

/// Central differences of f at every sample of x.
RasterD central_differences(const std::function<double(const RasterD&)>& f, const RasterD& x,
                            double h);

/// Covered pixels of `reference`, counted one pixel at a time.
struct Counted {
  long hit = 0, total = 0;
};
Counted count_covered(const Mask& pred, const Mask& reference);

/// Branches (labels 1..n) whose covered fraction reaches tau.
Counted count_detected_branches(const Mask& pred, const LabelRaster& labels, int n_branches,
                                double tau);

/// Dark line of Gaussian profile through the image center on a bright
/// background; the line runs along `direction` (radians, x right, y down).
RasterD line_image(int size, double direction, double sigma = 1.0, double contrast = 0.5);

/// Evenly spaced values in [lo, hi], one per pixel, in random order. Every
/// pair of samples differs by at least (hi - lo) / (rows cols).
RasterD distinct_probabilities(std::uint64_t seed, Index rows, Index cols, double lo = 0.05,
                               double hi = 0.95);

}  // namespace avtopo::verify
