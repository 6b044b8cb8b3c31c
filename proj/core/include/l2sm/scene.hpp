#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace l2sm {

/// A single annotated head in continuous pixel coordinates.
struct HeadAnnotation {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const HeadAnnotation&, const HeadAnnotation&) = default;
};

/// Image extent plus its head annotations. No pixel data is carried.
struct AnnotatedImage {
  int width = 1;
  int height = 1;
  std::vector<HeadAnnotation> heads;

  std::size_t count() const { return heads.size(); }

  friend bool operator==(const AnnotatedImage&, const AnnotatedImage&) = default;
};

/// Axis-aligned rectangle of grid cells, [x, x + width) x [y, y + height).
struct CellRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  int area() const { return width * height; }
  bool contains(double px, double py) const {
    return px >= x && px < x + width && py >= y && py < y + height;
  }

  friend bool operator==(const CellRect&, const CellRect&) = default;
};

/// Dense non-negative scalar field, row-major, one value per cell.
///
/// Values are persons per cell, so the sum over the grid is a count. The
/// constructors reject negative or non-finite values; code that writes
/// through `data()` is responsible for keeping that invariant.
class DensityGrid {
 public:
  DensityGrid() = default;
  DensityGrid(int width, int height);
  DensityGrid(int width, int height, std::vector<double> values);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double at(int x, int y) const { return values_[index(x, y)]; }
  double& at(int x, int y) { return values_[index(x, y)]; }

  std::span<const double> values() const { return values_; }
  std::span<double> data() { return values_; }
  std::span<const double> row(int y) const {
    return std::span<const double>(values_).subspan(
        static_cast<std::size_t>(y) * width_, width_);
  }

  double max_value() const;

  friend bool operator==(const DensityGrid&, const DensityGrid&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// Splits `extent` cells into `parts` contiguous spans and returns the
/// parts + 1 boundary offsets. Spans differ by at most one cell; the
/// remainder goes to the trailing spans.
std::vector<int> split_extent(int extent, int parts);

/// Expected persons per pixel over the image plane.
///
/// `piecewise` splits the image into tiles_x by tiles_y equal tiles (the
/// remainder pixels go to the last tile row/column) with one level each.
/// `gradient` varies linearly from `start` at the left (or top) edge to
/// `end` at the right (or bottom) edge.
struct Intensity {
  enum class Kind { piecewise, gradient };
  enum class Axis { x, y };

  Kind kind = Kind::piecewise;
  int tiles_x = 1;
  int tiles_y = 1;
  std::vector<double> levels{0.0};
  double start = 0.0;
  double end = 0.0;
  Axis axis = Axis::x;

  static Intensity constant(double level);
  static Intensity tiles(int tiles_x, int tiles_y, std::vector<double> levels);
  static Intensity linear(double start, double end, Axis axis = Axis::x);

  /// Mean intensity over the unit pixel whose top-left corner is (px, py).
  double pixel_mean(int px, int py, int width, int height) const;
};

struct SyntheticSceneSpec {
  int width = 64;
  int height = 64;
  Intensity intensity;
  std::uint64_t seed = 0;
};

/// Samples heads from an inhomogeneous Poisson process: one Poisson draw per
/// pixel with the pixel's mean intensity, each head jittered uniformly inside
/// its pixel. Pure in (spec, seed).
AnnotatedImage generate_scene(const SyntheticSceneSpec& spec);

/// Integral of the intensity over the image, i.e. the expected head count.
double expected_count(const SyntheticSceneSpec& spec);

struct SceneViolation {
  enum class Kind { bad_extent, non_finite, out_of_bounds };
  Kind kind;
  std::size_t head;  // meaningless for bad_extent
  std::string message;
};

/// Reports every invariant violation; an empty result means the image is valid.
std::vector<SceneViolation> validate_scene(const AnnotatedImage& img);

}  // namespace l2sm
