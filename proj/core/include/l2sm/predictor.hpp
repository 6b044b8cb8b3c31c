#pragma once

#include <cstdint>
#include <string>

#include "l2sm/density.hpp"
#include "l2sm/rescale.hpp"

namespace l2sm {

/// Stand-in for a learned density estimator.
///
/// `oracle` returns the ground truth with seeded per-cell multiplicative noise
/// in [1 - noise_level, 1 + noise_level]. `smooth_baseline` returns the ground
/// truth convolved with a Gaussian of blur_sigma, which merges nearby blobs
/// and so hurts dense regions most.
struct PredictorConfig {
  enum class Kind { oracle, smooth_baseline };

  Kind kind = Kind::oracle;
  double noise_level = 0.0;
  double blur_sigma = 3.0;
  std::uint64_t seed = 0;

  void validate() const;

  friend bool operator==(const PredictorConfig&, const PredictorConfig&) = default;
};

std::string to_string(PredictorConfig::Kind kind);
PredictorConfig::Kind predictor_kind_from_string(const std::string& name);

/// Zero-padded convolution with a unit-sum Gaussian truncated at 4 sigma.
DensityGrid gaussian_blur(const DensityGrid& grid, double sigma);

DensityGrid predict(const AnnotatedImage& img, const DensityGrid& gt, const PredictorConfig& config);

/// Re-prediction of a zoomed region: `predict` applied to the transformed
/// ground truth of the crop.
DensityGrid repredict_region(const RegionCrop& crop, double ratio, const PredictorConfig& config,
                             const KernelSpec& spec);

/// Squared L2 distance between two equally sized grids.
double squared_l2(const DensityGrid& a, const DensityGrid& b);

/// L_r of one region: squared L2 between the transformed ground truth and its
/// re-prediction at `ratio`.
double reprediction_loss(const RegionCrop& crop, double ratio, const PredictorConfig& config,
                         const KernelSpec& spec);

}  // namespace l2sm
