#pragma once

#include <optional>
#include <span>
#include <vector>

namespace l2sm {

struct CountPair {
  double truth = 0.0;
  double predicted = 0.0;
};

struct ImageError {
  double truth;
  double predicted;
  double abs_error;
};

/// Counting metrics over M images. `mse` is the root of the mean squared
/// error, following the usual crowd-counting convention. `mre` is MAE over the
/// mean true count and is absent when that mean is zero.
struct EvalReport {
  std::size_t M = 0;
  double mae = 0.0;
  double mse = 0.0;
  std::optional<double> mre;
  std::vector<ImageError> per_image;
  std::vector<std::optional<double>> per_group;  // empty unless filled by the caller
};

EvalReport evaluate(std::span<const CountPair> pairs);

struct LabeledPair {
  CountPair pair;
  int group = 0;
};

/// MAE of each group 0..G-1 computed independently; groups with no pairs are
/// reported as absent.
std::vector<std::optional<double>> evaluate_by_group(std::span<const LabeledPair> pairs, int G);

}  // namespace l2sm
