#include "l2sm/scene.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace l2sm {

namespace {

void check_extent(int width, int height, const char* what) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument(std::string(what) + ": width and height must be >= 1, got " +
                                std::to_string(width) + "x" + std::to_string(height));
  }
}

void check_level(double v, const char* what) {
  if (!std::isfinite(v) || v < 0.0) {
    throw std::invalid_argument(std::string("intensity ") + what +
                                " must be finite and non-negative");
  }
}

void validate_intensity(const Intensity& in) {
  switch (in.kind) {
    case Intensity::Kind::piecewise:
      if (in.tiles_x < 1 || in.tiles_y < 1) {
        throw std::invalid_argument("intensity tiles must be >= 1 per axis");
      }
      if (in.levels.size() != static_cast<std::size_t>(in.tiles_x) * in.tiles_y) {
        throw std::invalid_argument("intensity levels must have tiles_x * tiles_y entries");
      }
      for (double v : in.levels) check_level(v, "level");
      break;
    case Intensity::Kind::gradient:
      check_level(in.start, "start");
      check_level(in.end, "end");
      break;
  }
}

// Inverse of split_extent: which span holds cell `pos`.
int span_of(const std::vector<int>& bounds, int pos) {
  auto it = std::upper_bound(bounds.begin(), bounds.end(), pos);
  return static_cast<int>(it - bounds.begin()) - 1;
}

}  // namespace

DensityGrid::DensityGrid(int width, int height) : width_(width), height_(height) {
  check_extent(width, height, "DensityGrid");
  values_.assign(static_cast<std::size_t>(width) * height, 0.0);
}

DensityGrid::DensityGrid(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  check_extent(width, height, "DensityGrid");
  if (values_.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("DensityGrid: expected " +
                                std::to_string(static_cast<std::size_t>(width) * height) +
                                " values, got " + std::to_string(values_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("DensityGrid: values must be finite and non-negative");
    }
  }
}

double DensityGrid::max_value() const {
  if (values_.empty()) return 0.0;
  return *std::max_element(values_.begin(), values_.end());
}

std::vector<int> split_extent(int extent, int parts) {
  if (parts < 1 || parts > extent) {
    throw std::invalid_argument("cannot split " + std::to_string(extent) + " cells into " +
                                std::to_string(parts) + " parts");
  }
  const int base = extent / parts;
  const int remainder = extent % parts;
  std::vector<int> bounds(parts + 1, 0);
  for (int i = 0; i < parts; ++i) {
    const int extra = (i >= parts - remainder) ? 1 : 0;
    bounds[i + 1] = bounds[i] + base + extra;
  }
  return bounds;
}

Intensity Intensity::constant(double level) { return tiles(1, 1, {level}); }

Intensity Intensity::tiles(int tiles_x, int tiles_y, std::vector<double> levels) {
  Intensity in;
  in.kind = Kind::piecewise;
  in.tiles_x = tiles_x;
  in.tiles_y = tiles_y;
  in.levels = std::move(levels);
  return in;
}

Intensity Intensity::linear(double start, double end, Axis axis) {
  Intensity in;
  in.kind = Kind::gradient;
  in.start = start;
  in.end = end;
  in.axis = axis;
  return in;
}

double Intensity::pixel_mean(int px, int py, int width, int height) const {
  if (kind == Kind::gradient) {
    // A linear function's mean over a pixel is its value at the pixel center.
    const double t = axis == Axis::x ? (px + 0.5) / width : (py + 0.5) / height;
    return start + (end - start) * t;
  }
  if (tiles_x == 1 && tiles_y == 1) return levels[0];
  const auto bx = split_extent(width, tiles_x);
  const auto by = split_extent(height, tiles_y);
  return levels[static_cast<std::size_t>(span_of(by, py)) * tiles_x + span_of(bx, px)];
}

AnnotatedImage generate_scene(const SyntheticSceneSpec& spec) {
  check_extent(spec.width, spec.height, "SyntheticSceneSpec");
  validate_intensity(spec.intensity);
  const auto& in = spec.intensity;
  if (in.kind == Intensity::Kind::piecewise &&
      (in.tiles_x > spec.width || in.tiles_y > spec.height)) {
    throw std::invalid_argument("SyntheticSceneSpec: more intensity tiles than pixels");
  }

  AnnotatedImage img;
  img.width = spec.width;
  img.height = spec.height;

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);

  std::vector<int> tile_x, tile_y;
  if (in.kind == Intensity::Kind::piecewise) {
    const auto bx = split_extent(spec.width, in.tiles_x);
    const auto by = split_extent(spec.height, in.tiles_y);
    tile_x.resize(spec.width);
    tile_y.resize(spec.height);
    for (int x = 0; x < spec.width; ++x) tile_x[x] = span_of(bx, x);
    for (int y = 0; y < spec.height; ++y) tile_y[y] = span_of(by, y);
  }

  for (int py = 0; py < spec.height; ++py) {
    for (int px = 0; px < spec.width; ++px) {
      const double mean =
          in.kind == Intensity::Kind::piecewise
              ? in.levels[static_cast<std::size_t>(tile_y[py]) * in.tiles_x + tile_x[px]]
              : in.pixel_mean(px, py, spec.width, spec.height);
      if (mean <= 0.0) continue;
      std::poisson_distribution<int> draw(mean);
      const int n = draw(rng);
      for (int k = 0; k < n; ++k) {
        double x = px + jitter(rng);
        double y = py + jitter(rng);
        // px + u can round up to px + 1 for u close to 1.
        if (x >= px + 1) x = std::nextafter(static_cast<double>(px + 1), 0.0);
        if (y >= py + 1) y = std::nextafter(static_cast<double>(py + 1), 0.0);
        img.heads.push_back({x, y});
      }
    }
  }
  return img;
}

double expected_count(const SyntheticSceneSpec& spec) {
  check_extent(spec.width, spec.height, "SyntheticSceneSpec");
  validate_intensity(spec.intensity);
  double total = 0.0;
  for (int py = 0; py < spec.height; ++py) {
    for (int px = 0; px < spec.width; ++px) {
      total += spec.intensity.pixel_mean(px, py, spec.width, spec.height);
    }
  }
  return total;
}

std::vector<SceneViolation> validate_scene(const AnnotatedImage& img) {
  std::vector<SceneViolation> out;
  if (img.width < 1 || img.height < 1) {
    out.push_back({SceneViolation::Kind::bad_extent, 0,
                   "image extent " + std::to_string(img.width) + "x" +
                       std::to_string(img.height) + " is not positive"});
  }
  for (std::size_t i = 0; i < img.heads.size(); ++i) {
    const auto& h = img.heads[i];
    if (!std::isfinite(h.x) || !std::isfinite(h.y)) {
      out.push_back({SceneViolation::Kind::non_finite, i,
                     "head " + std::to_string(i) + " has a non-finite coordinate"});
    } else if (h.x < 0.0 || h.y < 0.0 || h.x >= img.width || h.y >= img.height) {
      out.push_back({SceneViolation::Kind::out_of_bounds, i,
                     "head " + std::to_string(i) + " lies outside the image"});
    }
  }
  return out;
}

}  // namespace l2sm
