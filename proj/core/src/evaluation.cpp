#include "l2sm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace l2sm {

EvalReport evaluate(std::span<const CountPair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("evaluate: no count pairs");
  EvalReport report;
  report.M = pairs.size();
  std::vector<double> errors;
  std::vector<double> truths;
  for (const auto& p : pairs) {
    if (!std::isfinite(p.truth) || !std::isfinite(p.predicted)) {
      throw std::invalid_argument("evaluate: counts must be finite");
    }
    const double err = std::abs(p.truth - p.predicted);
    errors.push_back(err);
    truths.push_back(p.truth);
    report.per_image.push_back({p.truth, p.predicted, err});
  }
  // Summing in sorted order makes the aggregates independent of pair order.
  std::sort(errors.begin(), errors.end());
  std::sort(truths.begin(), truths.end());
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  double truth_sum = 0.0;
  for (double e : errors) {
    abs_sum += e;
    sq_sum += e * e;
  }
  for (double t : truths) truth_sum += t;
  const double m = static_cast<double>(pairs.size());
  report.mae = abs_sum / m;
  report.mse = std::sqrt(sq_sum / m);
  const double mean_truth = truth_sum / m;
  if (mean_truth != 0.0) report.mre = report.mae / mean_truth;
  return report;
}

std::vector<std::optional<double>> evaluate_by_group(std::span<const LabeledPair> pairs, int G) {
  if (G < 1) throw std::invalid_argument("evaluate_by_group: G must be >= 1");
  std::vector<double> sum(static_cast<std::size_t>(G), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(G), 0);
  for (const auto& lp : pairs) {
    if (lp.group < 0 || lp.group >= G) {
      throw std::out_of_range("evaluate_by_group: label " + std::to_string(lp.group) +
                              " outside 0.." + std::to_string(G - 1));
    }
    sum[static_cast<std::size_t>(lp.group)] += std::abs(lp.pair.truth - lp.pair.predicted);
    ++count[static_cast<std::size_t>(lp.group)];
  }
  std::vector<std::optional<double>> out(static_cast<std::size_t>(G));
  for (std::size_t g = 0; g < out.size(); ++g) {
    if (count[g] > 0) out[g] = sum[g] / static_cast<double>(count[g]);
  }
  return out;
}

}  // namespace l2sm
