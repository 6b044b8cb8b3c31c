#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l2sm/regions.hpp"

namespace l2sm {

/// Per-region scale ratios of one image. Unselected regions keep ratio 1 and
/// carry no center.
struct ScaleField {
  int K = 1;
  std::vector<double> ratios;
  std::vector<bool> selected;
  std::vector<std::optional<int>> center;

  static ScaleField identity(int K);

  friend bool operator==(const ScaleField&, const ScaleField&) = default;
};

/// The C learnable density levels, ascending, with their update rate.
struct CenterBank {
  std::vector<double> centers;
  double alpha = 0.5;

  int C() const { return static_cast<int>(centers.size()); }
  bool ascending() const;
  void validate() const;

  friend bool operator==(const CenterBank&, const CenterBank&) = default;
};

/// One selected region seen by the center loss: its relative density
/// d = D / r^2 and the center it is pulled toward.
struct CenterSample {
  double relative_density = 0.0;
  int center = 0;
};

struct LossReport {
  double density_loss = 0.0;       // L_D
  double reprediction_loss = 0.0;  // L_r
  double center_loss = 0.0;        // L_c
  double lambda1 = 1.0;
  double lambda2 = 0.01;
  double total = 0.0;
};

double relative_density(double mean_density, double ratio);

/// Sum over samples of (d_i - center)^2.
double center_loss(std::span<const CenterSample> samples, const CenterBank& bank);

/// One online step per center:
///   delta_c = sum_i (center_c - d_i) / (1 + n_c),  center_c -= alpha * delta_c.
/// Centers without samples are left as they are.
CenterBank update_centers(std::span<const CenterSample> samples, const CenterBank& bank);

/// d/dr (D / r^2 - center)^2.
double grad_center_loss_wrt_ratio(double mean_density, double ratio, double center);

LossReport total_loss(double density_loss, double reprediction_loss, double center_loss,
                      double lambda1, double lambda2);

struct OptimizerConfig {
  double step_size = 1e-2;
  int iterations = 500;
  double lambda1 = 1.0;
  double lambda2 = 0.01;
  double r_min = 1.0;
  double r_max = 4.0;
  double alpha = 0.5;
  /// Halvings tried when a trial ratio would raise a region's objective.
  int max_backtracks = 30;
  /// Central-difference step (in ratio units) for the re-prediction term.
  double fd_step = 1e-3;

  void validate() const;

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

/// Re-prediction loss L_r of one region at a candidate ratio, addressed by
/// (image index, region index). When attached, each region minimises
/// lambda1 * L_r + lambda2 * L_c; otherwise it minimises L_c alone.
using RepredictionLoss = std::function<double(std::size_t image, std::size_t region, double ratio)>;

struct TraceRow {
  int iteration = 0;
  double center_loss = 0.0;
  double reprediction_loss = 0.0;
  std::vector<double> centers;
};

struct OptimizeResult {
  std::vector<ScaleField> fields;
  CenterBank bank;
  std::vector<TraceRow> trace;
  std::vector<std::string> warnings;
};

/// Center c starts at the mean density (ratio 1) of the selected regions
/// assigned to it. A center with no regions falls back to its group's lower
/// boundary; values are kept positive and non-decreasing.
CenterBank init_centers(std::span<const RegionPartition> partitions, const GroupModel& model,
                        double alpha);

/// Projected gradient descent on every selected region's ratio, one center
/// update per iteration.
///
/// Each iteration takes a gradient step on every selected region against the
/// current centers, projects it onto [r_min, r_max], then applies
/// update_centers to the new relative densities. A region's step is scaled by
/// 1 / center^2 of its initial center so that one step size serves density
/// levels that differ by orders of magnitude; if the trial ratio would raise
/// that region's objective the step is halved up to max_backtracks times.
/// Regions are visited in image order, then row-major, so results are
/// bit-reproducible.
OptimizeResult optimize_scales(std::span<const RegionPartition> partitions,
                               const GroupModel& model, const CenterBank& bank,
                               const OptimizerConfig& config,
                               const RepredictionLoss& reprediction = {});

struct RatioSearch {
  double ratio = 1.0;
  double objective = 0.0;
  double objective_at_start = 0.0;  // value at the first start, r_min
};

/// Minimises a one-dimensional objective of the ratio over [r_min, r_max].
///
/// Runs config.iterations steps of projected gradient descent with central
/// finite differences (config.fd_step) and step halving from each of `starts`
/// evenly spaced ratios, the first being r_min, and keeps the lowest value
/// (ties go to the smaller ratio). Re-prediction losses are not convex in the
/// ratio, hence the restarts.
RatioSearch optimize_ratio(const std::function<double(double)>& objective,
                           const OptimizerConfig& config, int starts = 7);

/// Relative-density samples of the selected regions under the given ratios.
std::vector<CenterSample> collect_samples(std::span<const RegionPartition> partitions,
                                          std::span<const ScaleField> fields);

struct CenterSpread {
  double pooled = 0.0;               // sqrt of mean squared deviation from own-center mean
  std::vector<double> per_center;    // population std per center, 0 when empty
};

CenterSpread within_center_spread(std::span<const CenterSample> samples, int C);

}  // namespace l2sm
