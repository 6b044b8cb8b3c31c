#pragma once

#include <span>
#include <vector>

#include "l2sm/scene.hpp"

namespace l2sm {

/// Geometry-adaptive kernel parameters.
///
/// sigma_i = beta * mean distance to the k nearest other heads, falling back
/// to all available neighbours when fewer than k exist and to sigma_default
/// for an isolated head.
struct KernelSpec {
  int k_neighbors = 3;
  double beta = 0.3;
  double sigma_default = 15.0;
  double truncation_radius_sigmas = 4.0;

  void validate() const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

std::vector<double> adaptive_sigmas(const AnnotatedImage& img, const KernelSpec& spec);

/// One cell touched by a truncated kernel; weights of a footprint sum to 1.
struct KernelCell {
  int x;
  int y;
  double weight;
};

/// Isotropic Gaussian centred at (x, y), sampled at cell centres within
/// truncation_radius_sigmas * sigma, and renormalised to unit mass over the
/// in-bounds cells. If no in-bounds cell centre lies within the radius the
/// whole mass goes to the in-bounds cell nearest to (x, y).
///
/// Offsets are computed relative to floor(x), floor(y), so shifting the head
/// by an integer shifts the footprint exactly.
std::vector<KernelCell> kernel_footprint(int width, int height, double x, double y,
                                         double sigma, double truncation_radius_sigmas);

/// Adds `mass` units of the head's footprint into `grid`.
void deposit_kernel(DensityGrid& grid, double x, double y, double sigma, double mass,
                    double truncation_radius_sigmas);

/// Ground-truth density: one unit-mass truncated kernel per head, accumulated
/// in head order. The grid has one cell per image pixel.
DensityGrid render_density(const AnnotatedImage& img, std::span<const double> sigmas,
                           const KernelSpec& spec);

/// Sum over all cells (compensated summation, fixed order).
double integrate(const DensityGrid& grid);

/// Sum over the cells of `rect`. Throws if rect is empty or leaves the grid.
double integrate_rect(const DensityGrid& grid, const CellRect& rect);

}  // namespace l2sm
