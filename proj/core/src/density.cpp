#include "l2sm/density.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>

namespace l2sm {

namespace {

// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Uniform bucket grid over head positions for k-nearest-neighbour queries.
class HeadBuckets {
 public:
  HeadBuckets(const AnnotatedImage& img) : heads_(img.heads) {
    const double area = static_cast<double>(img.width) * img.height;
    const double n = std::max<double>(1.0, static_cast<double>(heads_.size()));
    side_ = std::max(1.0, std::sqrt(area / n));
    nx_ = std::max(1, static_cast<int>(std::ceil(img.width / side_)));
    ny_ = std::max(1, static_cast<int>(std::ceil(img.height / side_)));
    cells_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    for (std::size_t i = 0; i < heads_.size(); ++i) {
      cells_[bucket_index(bucket_x(heads_[i].x), bucket_y(heads_[i].y))].push_back(i);
    }
  }

  // Distances to the k nearest other heads, ascending.
  std::vector<double> nearest(std::size_t self, int k) const {
    const auto& h = heads_[self];
    const int bx = bucket_x(h.x);
    const int by = bucket_y(h.y);
    std::priority_queue<double> best;  // max-heap of the k smallest
    const int max_ring = std::max(nx_, ny_);
    for (int ring = 0; ring <= max_ring; ++ring) {
      for (int y = by - ring; y <= by + ring; ++y) {
        if (y < 0 || y >= ny_) continue;
        const bool edge_row = (y == by - ring || y == by + ring);
        for (int x = bx - ring; x <= bx + ring; ++x) {
          if (x < 0 || x >= nx_) continue;
          if (!edge_row && x != bx - ring && x != bx + ring) continue;
          for (std::size_t j : cells_[bucket_index(x, y)]) {
            if (j == self) continue;
            const double d = std::hypot(heads_[j].x - h.x, heads_[j].y - h.y);
            if (static_cast<int>(best.size()) < k) {
              best.push(d);
            } else if (d < best.top()) {
              best.pop();
              best.push(d);
            }
          }
        }
      }
      // Unvisited buckets are at least ring * side_ away.
      if (static_cast<int>(best.size()) == k && best.top() <= ring * side_) break;
    }
    std::vector<double> out;
    out.reserve(best.size());
    while (!best.empty()) {
      out.push_back(best.top());
      best.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  int bucket_x(double x) const {
    return std::clamp(static_cast<int>(std::floor(x / side_)), 0, nx_ - 1);
  }
  int bucket_y(double y) const {
    return std::clamp(static_cast<int>(std::floor(y / side_)), 0, ny_ - 1);
  }
  std::size_t bucket_index(int x, int y) const {
    return static_cast<std::size_t>(y) * nx_ + x;
  }

  const std::vector<HeadAnnotation>& heads_;
  double side_ = 1.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::vector<std::size_t>> cells_;
};

}  // namespace

void KernelSpec::validate() const {
  if (k_neighbors < 1) throw std::invalid_argument("KernelSpec: k_neighbors must be >= 1");
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("KernelSpec: beta must be > 0");
  }
  if (!(sigma_default > 0.0) || !std::isfinite(sigma_default)) {
    throw std::invalid_argument("KernelSpec: sigma_default must be > 0");
  }
  if (!(truncation_radius_sigmas >= 2.0) || !std::isfinite(truncation_radius_sigmas)) {
    throw std::invalid_argument("KernelSpec: truncation_radius_sigmas must be >= 2");
  }
}

std::vector<double> adaptive_sigmas(const AnnotatedImage& img, const KernelSpec& spec) {
  spec.validate();
  std::vector<double> sigmas(img.heads.size(), spec.sigma_default);
  if (img.heads.size() < 2) return sigmas;

  const HeadBuckets buckets(img);
  for (std::size_t i = 0; i < img.heads.size(); ++i) {
    const auto dists = buckets.nearest(i, spec.k_neighbors);
    double sum = 0.0;
    for (double d : dists) sum += d;
    const double sigma = spec.beta * sum / static_cast<double>(dists.size());
    // Coincident heads give a zero mean distance; keep sigma strictly positive.
    sigmas[i] = sigma > 0.0 ? sigma : spec.sigma_default;
  }
  return sigmas;
}

std::vector<KernelCell> kernel_footprint(int width, int height, double x, double y,
                                         double sigma, double truncation_radius_sigmas) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("kernel sigma must be finite and > 0");
  }
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw std::invalid_argument("kernel centre must be finite");
  }
  const double radius = truncation_radius_sigmas * sigma;
  const double r2 = radius * radius;
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);

  const double ix = std::floor(x);
  const double iy = std::floor(y);
  const double fx = x - ix;
  const double fy = y - iy;

  // Cell (ix + o) has centre offset o + 0.5 - f from the head.
  const auto lo = [&](double f) { return static_cast<long long>(std::ceil(f - 0.5 - radius)); };
  const auto hi = [&](double f) { return static_cast<long long>(std::floor(f - 0.5 + radius)); };
  const long long cx0 = std::max<long long>(static_cast<long long>(ix) + lo(fx), 0);
  const long long cx1 = std::min<long long>(static_cast<long long>(ix) + hi(fx), width - 1);
  const long long cy0 = std::max<long long>(static_cast<long long>(iy) + lo(fy), 0);
  const long long cy1 = std::min<long long>(static_cast<long long>(iy) + hi(fy), height - 1);

  std::vector<KernelCell> cells;
  double total = 0.0;
  for (long long cy = cy0; cy <= cy1; ++cy) {
    const double dy = static_cast<double>(cy - static_cast<long long>(iy)) + (0.5 - fy);
    for (long long cx = cx0; cx <= cx1; ++cx) {
      const double dx = static_cast<double>(cx - static_cast<long long>(ix)) + (0.5 - fx);
      const double d2 = dx * dx + dy * dy;
      if (d2 > r2) continue;
      const double w = std::exp(-d2 * inv_two_var);
      cells.push_back({static_cast<int>(cx), static_cast<int>(cy), w});
      total += w;
    }
  }

  if (cells.empty() || !(total > 0.0)) {
    const int nx = static_cast<int>(std::clamp<double>(ix, 0.0, width - 1.0));
    const int ny = static_cast<int>(std::clamp<double>(iy, 0.0, height - 1.0));
    return {{nx, ny, 1.0}};
  }
  for (auto& c : cells) c.weight /= total;
  return cells;
}

void deposit_kernel(DensityGrid& grid, double x, double y, double sigma, double mass,
                    double truncation_radius_sigmas) {
  for (const auto& c :
       kernel_footprint(grid.width(), grid.height(), x, y, sigma, truncation_radius_sigmas)) {
    grid.at(c.x, c.y) += mass * c.weight;
  }
}

DensityGrid render_density(const AnnotatedImage& img, std::span<const double> sigmas,
                           const KernelSpec& spec) {
  spec.validate();
  if (sigmas.size() != img.heads.size()) {
    throw std::invalid_argument("render_density: " + std::to_string(sigmas.size()) +
                                " sigmas for " + std::to_string(img.heads.size()) + " heads");
  }
  DensityGrid grid(img.width, img.height);
  for (std::size_t i = 0; i < img.heads.size(); ++i) {
    deposit_kernel(grid, img.heads[i].x, img.heads[i].y, sigmas[i], 1.0,
                   spec.truncation_radius_sigmas);
  }
  return grid;
}

double integrate(const DensityGrid& grid) {
  CompensatedSum sum;
  for (double v : grid.values()) sum.add(v);
  return sum.value();
}

double integrate_rect(const DensityGrid& grid, const CellRect& rect) {
  if (rect.width < 1 || rect.height < 1 || rect.x < 0 || rect.y < 0 ||
      rect.x + rect.width > grid.width() || rect.y + rect.height > grid.height()) {
    throw std::out_of_range("integrate_rect: rectangle (" + std::to_string(rect.x) + ", " +
                            std::to_string(rect.y) + ", " + std::to_string(rect.width) + "x" +
                            std::to_string(rect.height) + ") is empty or outside the " +
                            std::to_string(grid.width()) + "x" +
                            std::to_string(grid.height()) + " grid");
  }
  CompensatedSum sum;
  for (int y = rect.y; y < rect.y + rect.height; ++y) {
    const auto row = grid.row(y);
    for (int x = rect.x; x < rect.x + rect.width; ++x) sum.add(row[x]);
  }
  return sum.value();
}

}  // namespace l2sm
