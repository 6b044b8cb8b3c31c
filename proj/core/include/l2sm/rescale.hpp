#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "l2sm/density.hpp"
#include "l2sm/regions.hpp"

namespace l2sm {

/// The annotations that make up one region's ground truth.
///
/// Coordinates are relative to `source`'s origin. `weights[m]` is the kernel
/// mass head m contributes to the region: 1 for a self-contained crop, the
/// in-region fraction of its full-image kernel for a crop taken with
/// crop_region. Heads centred outside the rectangle appear only in the latter
/// case, when their kernel spills into the region.
struct RegionCrop {
  CellRect source;
  std::vector<HeadAnnotation> heads;
  std::vector<double> sigmas;
  std::vector<double> weights;

  int width() const { return source.width; }
  int height() const { return source.height; }
  double mass() const;

  /// A self-contained crop: every head inside the rectangle, unit weight.
  static RegionCrop from_heads(CellRect source, std::vector<HeadAnnotation> heads,
                               std::vector<double> sigmas);

  void validate() const;
};

/// Mass-matched crop of `rect`: every head whose truncated kernel overlaps the
/// rectangle, weighted by the overlapping fraction, so rendering the crop at
/// ratio 1 reproduces the full-image ground truth restricted to the region.
RegionCrop crop_region(const AnnotatedImage& img, std::span<const double> sigmas,
                       const CellRect& rect, const KernelSpec& spec);

/// ceil(ratio * extent), guarded against round-up from representation error.
int scaled_extent(int extent, double ratio);

/// Ground truth of the crop zoomed by `ratio`: head positions are multiplied
/// by the ratio while every kernel keeps its original sigma, so blobs move
/// apart but keep their peaks. Canvas is scaled_extent of the crop. A head
/// inside the crop whose scaled position lands on or past the far border is
/// pulled back to half a cell inside.
DensityGrid transform_ground_truth(const RegionCrop& crop, double ratio, const KernelSpec& spec);

/// Bilinear interpolation with cell centres aligned and edges clamped.
DensityGrid bilinear_resample(const DensityGrid& grid, int out_width, int out_height);

/// Area-weighted box resampling; preserves the mean of every covered span.
DensityGrid area_resample(const DensityGrid& grid, int out_width, int out_height);

/// Brings a re-predicted zoomed region back to its original size: bilinear
/// resampling, multiplication by ratio^2, then a final correction factor so
/// the output integral equals the input integral. Falls back to area
/// resampling when bilinear sampling misses all of the input mass.
DensityGrid count_preserving_downscale(const DensityGrid& grid, double ratio, int target_width,
                                       int target_height);

/// Replaces the listed regions of `initial` with their re-predictions.
DensityGrid assemble(const DensityGrid& initial, const RegionPartition& partition,
                     const std::map<std::size_t, DensityGrid>& repredictions);

}  // namespace l2sm
