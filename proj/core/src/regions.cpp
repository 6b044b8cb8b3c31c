#include "l2sm/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "l2sm/density.hpp"

namespace l2sm {

namespace {

// ceil(n * j / G) without floating point.
std::size_t ceil_fraction(std::size_t n, int j, int G) {
  const std::size_t num = n * static_cast<std::size_t>(j);
  return (num + static_cast<std::size_t>(G) - 1) / static_cast<std::size_t>(G);
}

void check_groups(int G, int C) {
  if (G < 1) throw std::invalid_argument("group count G must be >= 1");
  if (C < 1 || C > G) {
    throw std::invalid_argument("dense group count C must satisfy 1 <= C <= G (G=" +
                                std::to_string(G) + ", C=" + std::to_string(C) + ")");
  }
}

}  // namespace

std::vector<CellRect> region_rects(int width, int height, int K) {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  if (K > width || K > height) {
    throw std::invalid_argument("K=" + std::to_string(K) + " exceeds the " +
                                std::to_string(width) + "x" + std::to_string(height) +
                                " grid extent");
  }
  const auto bx = split_extent(width, K);
  const auto by = split_extent(height, K);
  std::vector<CellRect> rects;
  rects.reserve(static_cast<std::size_t>(K) * K);
  for (int r = 0; r < K; ++r) {
    for (int c = 0; c < K; ++c) {
      rects.push_back({bx[c], by[r], bx[c + 1] - bx[c], by[r + 1] - by[r]});
    }
  }
  return rects;
}

RegionPartition divide(const DensityGrid& grid, int K) {
  RegionPartition p;
  p.K = K;
  const auto rects = region_rects(grid.width(), grid.height(), K);
  p.regions.reserve(rects.size());
  for (std::size_t i = 0; i < rects.size(); ++i) {
    Region reg;
    reg.row = static_cast<int>(i) / K;
    reg.col = static_cast<int>(i) % K;
    reg.rect = rects[i];
    reg.area = rects[i].area();
    reg.mean_density = integrate_rect(grid, rects[i]) / reg.area;
    p.regions.push_back(reg);
  }
  return p;
}

double GroupModel::selection_threshold() const {
  if (C >= G) return -std::numeric_limits<double>::infinity();
  return boundaries[static_cast<std::size_t>(G - C - 1)];
}

void GroupModel::validate() const {
  check_groups(G, C);
  if (boundaries.size() != static_cast<std::size_t>(G - 1)) {
    throw std::invalid_argument("GroupModel: expected " + std::to_string(G - 1) +
                                " boundaries, got " + std::to_string(boundaries.size()));
  }
  for (double b : boundaries) {
    if (!std::isfinite(b)) throw std::invalid_argument("GroupModel: non-finite boundary");
  }
  if (!std::is_sorted(boundaries.begin(), boundaries.end())) {
    throw std::invalid_argument("GroupModel: boundaries must be non-decreasing");
  }
}

GroupModel fit_groups(std::span<const double> region_densities, int G, int C) {
  check_groups(G, C);
  if (region_densities.empty()) {
    throw std::invalid_argument("fit_groups: no region densities");
  }
  for (double d : region_densities) {
    if (!std::isfinite(d)) throw std::invalid_argument("fit_groups: non-finite density");
  }
  std::vector<double> sorted(region_densities.begin(), region_densities.end());
  std::sort(sorted.begin(), sorted.end());

  GroupModel model;
  model.G = G;
  model.C = C;
  const std::size_t n = sorted.size();
  for (int j = 1; j < G; ++j) {
    // 1-based position ceil(n*j/G); clamp for n < G where it can be 0.
    const std::size_t pos = std::max<std::size_t>(ceil_fraction(n, j, G), 1);
    model.boundaries.push_back(sorted[pos - 1]);
  }
  return model;
}

std::vector<int> split_groups(std::span<const double> region_densities, int G) {
  if (G < 1) throw std::invalid_argument("group count G must be >= 1");
  const std::size_t n = region_densities.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return region_densities[a] < region_densities[b];
  });
  std::vector<int> labels(n, 0);
  for (int j = 0; j < G; ++j) {
    for (std::size_t p = ceil_fraction(n, j, G); p < ceil_fraction(n, j + 1, G); ++p) {
      labels[order[p]] = j;
    }
  }
  return labels;
}

int assign_group(double density, const GroupModel& model) {
  return static_cast<int>(
      std::lower_bound(model.boundaries.begin(), model.boundaries.end(), density) -
      model.boundaries.begin());
}

std::size_t DenseSelection::count() const {
  return static_cast<std::size_t>(std::count(selected.begin(), selected.end(), true));
}

DenseSelection select_dense(const RegionPartition& partition, const GroupModel& model) {
  model.validate();
  const double threshold = model.selection_threshold();
  const int offset = model.G - model.C;
  DenseSelection sel;
  const std::size_t n = partition.regions.size();
  sel.selected.assign(n, false);
  sel.center.assign(n, std::nullopt);
  sel.group.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = partition.regions[i].mean_density;
    sel.group[i] = assign_group(d, model);
    if (d > threshold) {
      sel.selected[i] = true;
      // d > boundaries[G-C-1] implies group >= G-C.
      sel.center[i] = sel.group[i] - offset;
    }
  }
  return sel;
}

}  // namespace l2sm
