#include "l2sm/rescale.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace l2sm {

namespace {

void check_ratio(double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    throw std::invalid_argument("scale ratio must be finite and > 0, got " +
                                std::to_string(ratio));
  }
}

void check_target(int w, int h) {
  if (w < 1 || h < 1) {
    throw std::invalid_argument("resample target must be at least 1x1, got " +
                                std::to_string(w) + "x" + std::to_string(h));
  }
}

void scale_in_place(DensityGrid& grid, double factor) {
  for (double& v : grid.data()) v *= factor;
}

// Source-cell overlap of each output span along one axis.
struct Overlap {
  int src;
  double weight;
};

std::vector<std::vector<Overlap>> area_weights(int in, int out) {
  std::vector<std::vector<Overlap>> w(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    const double a = o * scale;
    const double b = (o + 1) * scale;
    for (int s = static_cast<int>(std::floor(a)); s < in && s < b; ++s) {
      const double len = std::min<double>(b, s + 1) - std::max<double>(a, s);
      if (len > 0.0) w[o].push_back({s, len / scale});
    }
  }
  return w;
}

}  // namespace

double RegionCrop::mass() const {
  double m = 0.0;
  for (double w : weights) m += w;
  return m;
}

RegionCrop RegionCrop::from_heads(CellRect source, std::vector<HeadAnnotation> heads,
                                  std::vector<double> sigmas) {
  RegionCrop crop;
  crop.source = source;
  crop.heads = std::move(heads);
  crop.sigmas = std::move(sigmas);
  crop.weights.assign(crop.heads.size(), 1.0);
  crop.validate();
  return crop;
}

void RegionCrop::validate() const {
  if (source.width < 1 || source.height < 1) {
    throw std::invalid_argument("RegionCrop: empty source rectangle");
  }
  if (sigmas.size() != heads.size() || weights.size() != heads.size()) {
    throw std::invalid_argument("RegionCrop: heads, sigmas and weights must have equal length");
  }
  for (std::size_t m = 0; m < heads.size(); ++m) {
    if (!std::isfinite(heads[m].x) || !std::isfinite(heads[m].y)) {
      throw std::invalid_argument("RegionCrop: non-finite head coordinate");
    }
    if (!(sigmas[m] > 0.0)) throw std::invalid_argument("RegionCrop: sigma must be > 0");
    if (!(weights[m] >= 0.0) || weights[m] > 1.0 + 1e-12) {
      throw std::invalid_argument("RegionCrop: weights must lie in [0, 1]");
    }
    // Unit weight marks a head owned by the crop; it must lie inside.
    const bool inside = heads[m].x >= 0.0 && heads[m].y >= 0.0 && heads[m].x < source.width &&
                        heads[m].y < source.height;
    if (weights[m] == 1.0 && !inside) {
      throw std::invalid_argument("RegionCrop: unit-weight head outside the rectangle");
    }
  }
}

RegionCrop crop_region(const AnnotatedImage& img, std::span<const double> sigmas,
                       const CellRect& rect, const KernelSpec& spec) {
  spec.validate();
  if (sigmas.size() != img.heads.size()) {
    throw std::invalid_argument("crop_region: sigmas do not match heads");
  }
  if (rect.width < 1 || rect.height < 1 || rect.x < 0 || rect.y < 0 ||
      rect.x + rect.width > img.width || rect.y + rect.height > img.height) {
    throw std::out_of_range("crop_region: rectangle outside the image");
  }
  RegionCrop crop;
  crop.source = rect;
  for (std::size_t i = 0; i < img.heads.size(); ++i) {
    const auto& h = img.heads[i];
    const double reach = spec.truncation_radius_sigmas * sigmas[i] + 1.0;
    if (h.x + reach < rect.x || h.x - reach > rect.x + rect.width || h.y + reach < rect.y ||
        h.y - reach > rect.y + rect.height) {
      continue;
    }
    double inside = 0.0;
    double total = 0.0;
    for (const auto& c : kernel_footprint(img.width, img.height, h.x, h.y, sigmas[i],
                                          spec.truncation_radius_sigmas)) {
      total += c.weight;
      if (c.x >= rect.x && c.x < rect.x + rect.width && c.y >= rect.y &&
          c.y < rect.y + rect.height) {
        inside += c.weight;
      }
    }
    if (inside <= 0.0) continue;
    const bool owned = rect.contains(h.x, h.y);
    double weight = std::min(inside / total, 1.0);
    // Owned heads whose kernel never leaves the rectangle carry exactly one unit.
    if (owned && weight > 1.0 - 1e-12) weight = 1.0;
    if (!owned && weight == 1.0) weight = std::nextafter(1.0, 0.0);
    crop.heads.push_back({h.x - rect.x, h.y - rect.y});
    crop.sigmas.push_back(sigmas[i]);
    crop.weights.push_back(weight);
  }
  return crop;
}

int scaled_extent(int extent, double ratio) {
  check_ratio(ratio);
  const double scaled = ratio * extent;
  return std::max(1, static_cast<int>(std::ceil(scaled - 1e-9 * std::max(1.0, scaled))));
}

DensityGrid transform_ground_truth(const RegionCrop& crop, double ratio, const KernelSpec& spec) {
  check_ratio(ratio);
  spec.validate();
  crop.validate();
  const int w = scaled_extent(crop.width(), ratio);
  const int h = scaled_extent(crop.height(), ratio);
  DensityGrid out(w, h);
  for (std::size_t m = 0; m < crop.heads.size(); ++m) {
    double x = ratio * crop.heads[m].x;
    double y = ratio * crop.heads[m].y;
    const auto& src = crop.heads[m];
    if (src.x >= 0.0 && src.x < crop.width() && x >= w) x = w - 0.5;
    if (src.y >= 0.0 && src.y < crop.height() && y >= h) y = h - 0.5;
    deposit_kernel(out, x, y, crop.sigmas[m], crop.weights[m], spec.truncation_radius_sigmas);
  }
  return out;
}

DensityGrid bilinear_resample(const DensityGrid& grid, int out_width, int out_height) {
  check_target(out_width, out_height);
  if (grid.empty()) throw std::invalid_argument("bilinear_resample: empty grid");
  if (out_width == grid.width() && out_height == grid.height()) return grid;

  const auto axis = [](int in, int out) {
    struct Tap {
      int i0, i1;
      double t;
    };
    std::vector<Tap> taps(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
      const double s = std::clamp((o + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
      const int i0 = static_cast<int>(std::floor(s));
      const int i1 = std::min(i0 + 1, in - 1);
      taps[o] = {i0, i1, s - i0};
    }
    return taps;
  };
  const auto tx = axis(grid.width(), out_width);
  const auto ty = axis(grid.height(), out_height);

  DensityGrid out(out_width, out_height);
  for (int y = 0; y < out_height; ++y) {
    const auto& vy = ty[y];
    for (int x = 0; x < out_width; ++x) {
      const auto& vx = tx[x];
      const double top = grid.at(vx.i0, vy.i0) * (1.0 - vx.t) + grid.at(vx.i1, vy.i0) * vx.t;
      const double bottom = grid.at(vx.i0, vy.i1) * (1.0 - vx.t) + grid.at(vx.i1, vy.i1) * vx.t;
      out.at(x, y) = top * (1.0 - vy.t) + bottom * vy.t;
    }
  }
  return out;
}

DensityGrid area_resample(const DensityGrid& grid, int out_width, int out_height) {
  check_target(out_width, out_height);
  if (grid.empty()) throw std::invalid_argument("area_resample: empty grid");
  const auto wx = area_weights(grid.width(), out_width);
  const auto wy = area_weights(grid.height(), out_height);
  DensityGrid out(out_width, out_height);
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      double v = 0.0;
      for (const auto& oy : wy[y]) {
        for (const auto& ox : wx[x]) v += grid.at(ox.src, oy.src) * ox.weight * oy.weight;
      }
      out.at(x, y) = v;
    }
  }
  return out;
}

DensityGrid count_preserving_downscale(const DensityGrid& grid, double ratio, int target_width,
                                       int target_height) {
  check_ratio(ratio);
  check_target(target_width, target_height);
  if (ratio == 1.0 && target_width == grid.width() && target_height == grid.height()) {
    return grid;
  }
  const double mass = integrate(grid);
  DensityGrid out = bilinear_resample(grid, target_width, target_height);
  scale_in_place(out, ratio * ratio);
  double out_mass = integrate(out);
  if (mass > 0.0 && !(out_mass > 0.0)) {
    out = area_resample(grid, target_width, target_height);
    scale_in_place(out, ratio * ratio);
    out_mass = integrate(out);
  }
  if (out_mass > 0.0) scale_in_place(out, mass / out_mass);
  return out;
}

DensityGrid assemble(const DensityGrid& initial, const RegionPartition& partition,
                     const std::map<std::size_t, DensityGrid>& repredictions) {
  DensityGrid out = initial;
  for (const auto& [index, grid] : repredictions) {
    if (index >= partition.regions.size()) {
      throw std::out_of_range("assemble: region index " + std::to_string(index) +
                              " outside the partition");
    }
    const auto& rect = partition.regions[index].rect;
    if (grid.width() != rect.width || grid.height() != rect.height) {
      throw std::invalid_argument("assemble: re-prediction for region " + std::to_string(index) +
                                  " is " + std::to_string(grid.width()) + "x" +
                                  std::to_string(grid.height()) + ", region is " +
                                  std::to_string(rect.width) + "x" +
                                  std::to_string(rect.height));
    }
    if (rect.x + rect.width > out.width() || rect.y + rect.height > out.height()) {
      throw std::invalid_argument("assemble: partition does not fit the initial grid");
    }
    for (int y = 0; y < rect.height; ++y) {
      for (int x = 0; x < rect.width; ++x) out.at(rect.x + x, rect.y + y) = grid.at(x, y);
    }
  }
  return out;
}

}  // namespace l2sm
