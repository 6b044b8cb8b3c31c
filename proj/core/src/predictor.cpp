#include "l2sm/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace l2sm {

namespace {

std::vector<double> gaussian_taps(double sigma, int& radius) {
  radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : taps) v /= sum;
  return taps;
}

}  // namespace

void PredictorConfig::validate() const {
  if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) {
    throw std::invalid_argument("PredictorConfig: noise_level must be finite and >= 0");
  }
  if (!(blur_sigma > 0.0) || !std::isfinite(blur_sigma)) {
    throw std::invalid_argument("PredictorConfig: blur_sigma must be finite and > 0");
  }
}

std::string to_string(PredictorConfig::Kind kind) {
  return kind == PredictorConfig::Kind::oracle ? "oracle" : "smooth-baseline";
}

PredictorConfig::Kind predictor_kind_from_string(const std::string& name) {
  if (name == "oracle") return PredictorConfig::Kind::oracle;
  if (name == "smooth-baseline") return PredictorConfig::Kind::smooth_baseline;
  throw std::invalid_argument("unknown predictor kind '" + name +
                              "' (expected oracle or smooth-baseline)");
}

DensityGrid gaussian_blur(const DensityGrid& grid, double sigma) {
  int radius = 0;
  const auto taps = gaussian_taps(sigma, radius);
  const int w = grid.width();
  const int h = grid.height();

  DensityGrid tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int sx = x + k;
        if (sx < 0 || sx >= w) continue;
        acc += taps[static_cast<std::size_t>(k + radius)] * grid.at(sx, y);
      }
      tmp.at(x, y) = acc;
    }
  }
  DensityGrid out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int sy = y + k;
        if (sy < 0 || sy >= h) continue;
        acc += taps[static_cast<std::size_t>(k + radius)] * tmp.at(x, sy);
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

DensityGrid predict(const AnnotatedImage& img, const DensityGrid& gt, const PredictorConfig& config) {
  config.validate();
  if (gt.width() != img.width || gt.height() != img.height) {
    throw std::invalid_argument("predict: ground truth is " + std::to_string(gt.width()) + "x" +
                                std::to_string(gt.height()) + " but the image is " +
                                std::to_string(img.width) + "x" + std::to_string(img.height));
  }
  if (config.kind == PredictorConfig::Kind::smooth_baseline) {
    return gaussian_blur(gt, config.blur_sigma);
  }
  DensityGrid out = gt;
  if (config.noise_level == 0.0) return out;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> eps(-config.noise_level, config.noise_level);
  for (double& v : out.data()) v = std::max(0.0, v * (1.0 + eps(rng)));
  return out;
}

DensityGrid repredict_region(const RegionCrop& crop, double ratio, const PredictorConfig& config,
                             const KernelSpec& spec) {
  const DensityGrid target = transform_ground_truth(crop, ratio, spec);
  AnnotatedImage scaled;
  scaled.width = target.width();
  scaled.height = target.height();
  return predict(scaled, target, config);
}

double squared_l2(const DensityGrid& a, const DensityGrid& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw std::invalid_argument("squared_l2: grid sizes differ");
  }
  double sum = 0.0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = va[i] - vb[i];
    sum += d * d;
  }
  return sum;
}

double reprediction_loss(const RegionCrop& crop, double ratio, const PredictorConfig& config,
                         const KernelSpec& spec) {
  const DensityGrid target = transform_ground_truth(crop, ratio, spec);
  AnnotatedImage scaled;
  scaled.width = target.width();
  scaled.height = target.height();
  return squared_l2(target, predict(scaled, target, config));
}

}  // namespace l2sm
