#pragma once

#include <optional>
#include <span>
#include <vector>

#include "l2sm/scene.hpp"

namespace l2sm {

struct Region {
  int row = 0;
  int col = 0;
  CellRect rect;
  double mean_density = 0.0;  // persons per cell
  int area = 0;
};

/// K x K tiling of a grid, regions stored row-major.
struct RegionPartition {
  int K = 1;
  std::vector<Region> regions;

  const Region& at(int row, int col) const {
    return regions[static_cast<std::size_t>(row) * K + col];
  }
};

/// Splits the grid into K x K non-overlapping regions. Remainder cells go to
/// the trailing rows/columns of regions, one each, so region extents differ
/// by at most one cell.
RegionPartition divide(const DensityGrid& grid, int K);

/// Just the rectangles of a K x K partition of a width x height extent.
std::vector<CellRect> region_rects(int width, int height, int K);

/// Dataset-level density groups.
///
/// `boundaries[j - 1]` is the sorted density at 1-based position
/// ceil(n * j / G); intervals are right-closed, so a density equal to a
/// boundary belongs to the lower group.
struct GroupModel {
  int G = 5;
  int C = 3;
  std::vector<double> boundaries;

  /// Regions strictly above this density are selected for rescaling. When
  /// C == G every region is selected and the threshold is -infinity.
  double selection_threshold() const;

  void validate() const;

  friend bool operator==(const GroupModel&, const GroupModel&) = default;
};

/// Fits G - 1 quantile boundaries to the dataset's region densities, which
/// must be ordered by image then row-major region.
GroupModel fit_groups(std::span<const double> region_densities, int G, int C = 3);

/// Sort-and-split labels for the same input: stable sort on (density, index),
/// then sorted positions [ceil(n*j/G), ceil(n*(j+1)/G)) form group j. Group
/// sizes differ by at most one, ties included.
std::vector<int> split_groups(std::span<const double> region_densities, int G);

/// Number of boundaries strictly below `density`.
int assign_group(double density, const GroupModel& model);

struct DenseSelection {
  std::vector<bool> selected;                // per region, row-major
  std::vector<std::optional<int>> center;    // group - (G - C) when selected
  std::vector<int> group;                    // assign_group of every region

  std::size_t count() const;
};

DenseSelection select_dense(const RegionPartition& partition, const GroupModel& model);

}  // namespace l2sm
