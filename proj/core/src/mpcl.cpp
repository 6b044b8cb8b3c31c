#include "l2sm/mpcl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace l2sm {

namespace {

constexpr double kMinCenter = 1e-12;

void check_ratio(double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    throw std::invalid_argument("scale ratio must be finite and > 0, got " +
                                std::to_string(ratio));
  }
}

void check_center_index(int c, int C) {
  if (c < 0 || c >= C) {
    throw std::out_of_range("center index " + std::to_string(c) + " outside 0.." +
                            std::to_string(C - 1));
  }
}

struct SelectedRegion {
  std::size_t image;
  std::size_t region;
  double mean_density;
  int center;
  double scale;  // squared initial center, the step preconditioner
};

}  // namespace

ScaleField ScaleField::identity(int K) {
  ScaleField f;
  f.K = K;
  const auto n = static_cast<std::size_t>(K) * K;
  f.ratios.assign(n, 1.0);
  f.selected.assign(n, false);
  f.center.assign(n, std::nullopt);
  return f;
}

bool CenterBank::ascending() const { return std::is_sorted(centers.begin(), centers.end()); }

void CenterBank::validate() const {
  if (centers.empty()) throw std::invalid_argument("CenterBank: no centers");
  for (double c : centers) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw std::invalid_argument("CenterBank: centers must be finite and > 0");
    }
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("CenterBank: alpha must be finite and > 0");
  }
}

double relative_density(double mean_density, double ratio) {
  check_ratio(ratio);
  return mean_density / (ratio * ratio);
}

double center_loss(std::span<const CenterSample> samples, const CenterBank& bank) {
  double loss = 0.0;
  for (const auto& s : samples) {
    check_center_index(s.center, bank.C());
    const double r = s.relative_density - bank.centers[static_cast<std::size_t>(s.center)];
    loss += r * r;
  }
  return loss;
}

CenterBank update_centers(std::span<const CenterSample> samples, const CenterBank& bank) {
  std::vector<double> residual_sum(bank.centers.size(), 0.0);
  std::vector<std::size_t> count(bank.centers.size(), 0);
  for (const auto& s : samples) {
    check_center_index(s.center, bank.C());
    const auto c = static_cast<std::size_t>(s.center);
    residual_sum[c] += bank.centers[c] - s.relative_density;
    ++count[c];
  }
  CenterBank next = bank;
  for (std::size_t c = 0; c < next.centers.size(); ++c) {
    const double delta = residual_sum[c] / (1.0 + static_cast<double>(count[c]));
    next.centers[c] = bank.centers[c] - bank.alpha * delta;
  }
  return next;
}

double grad_center_loss_wrt_ratio(double mean_density, double ratio, double center) {
  check_ratio(ratio);
  const double r2 = ratio * ratio;
  const double residual = mean_density / r2 - center;
  return 2.0 * residual * (-2.0 * mean_density / (r2 * ratio));
}

LossReport total_loss(double density_loss, double reprediction_loss, double center_loss,
                      double lambda1, double lambda2) {
  for (double v : {density_loss, reprediction_loss, center_loss, lambda1, lambda2}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("total_loss: components and weights must be finite and >= 0");
    }
  }
  LossReport r;
  r.density_loss = density_loss;
  r.reprediction_loss = reprediction_loss;
  r.center_loss = center_loss;
  r.lambda1 = lambda1;
  r.lambda2 = lambda2;
  r.total = density_loss + lambda1 * reprediction_loss + lambda2 * center_loss;
  return r;
}

void OptimizerConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw std::invalid_argument("optimizer step_size must be > 0");
  }
  if (iterations < 0) throw std::invalid_argument("optimizer iterations must be >= 0");
  if (!(r_min > 0.0) || !(r_max >= r_min) || !std::isfinite(r_max)) {
    throw std::invalid_argument("optimizer ratio bounds must satisfy 0 < r_min <= r_max");
  }
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
    throw std::invalid_argument("optimizer loss weights must be >= 0");
  }
  if (!(alpha > 0.0)) throw std::invalid_argument("optimizer alpha must be > 0");
  if (max_backtracks < 0) throw std::invalid_argument("optimizer max_backtracks must be >= 0");
  if (!(fd_step > 0.0)) throw std::invalid_argument("optimizer fd_step must be > 0");
}

CenterBank init_centers(std::span<const RegionPartition> partitions, const GroupModel& model,
                        double alpha) {
  model.validate();
  std::vector<double> sum(static_cast<std::size_t>(model.C), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(model.C), 0);
  for (const auto& p : partitions) {
    const auto sel = select_dense(p, model);
    for (std::size_t i = 0; i < p.regions.size(); ++i) {
      if (!sel.center[i]) continue;
      const auto c = static_cast<std::size_t>(*sel.center[i]);
      sum[c] += p.regions[i].mean_density;
      ++count[c];
    }
  }
  CenterBank bank;
  bank.alpha = alpha;
  double prev = kMinCenter;
  for (int c = 0; c < model.C; ++c) {
    double v;
    if (count[c] > 0) {
      v = sum[c] / static_cast<double>(count[c]);
    } else {
      const int b = model.G - model.C + c - 1;
      v = b >= 0 ? model.boundaries[static_cast<std::size_t>(b)] : prev;
    }
    v = std::max({v, prev, kMinCenter});
    bank.centers.push_back(v);
    prev = v;
  }
  return bank;
}

std::vector<CenterSample> collect_samples(std::span<const RegionPartition> partitions,
                                          std::span<const ScaleField> fields) {
  if (partitions.size() != fields.size()) {
    throw std::invalid_argument("collect_samples: one scale field per partition required");
  }
  std::vector<CenterSample> out;
  for (std::size_t img = 0; img < partitions.size(); ++img) {
    const auto& p = partitions[img];
    const auto& f = fields[img];
    if (f.ratios.size() != p.regions.size()) {
      throw std::invalid_argument("collect_samples: scale field does not match partition");
    }
    for (std::size_t i = 0; i < p.regions.size(); ++i) {
      if (!f.selected[i] || !f.center[i]) continue;
      out.push_back({relative_density(p.regions[i].mean_density, f.ratios[i]), *f.center[i]});
    }
  }
  return out;
}

CenterSpread within_center_spread(std::span<const CenterSample> samples, int C) {
  std::vector<double> sum(static_cast<std::size_t>(C), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(C), 0);
  for (const auto& s : samples) {
    check_center_index(s.center, C);
    sum[static_cast<std::size_t>(s.center)] += s.relative_density;
    ++count[static_cast<std::size_t>(s.center)];
  }
  std::vector<double> sq(static_cast<std::size_t>(C), 0.0);
  for (const auto& s : samples) {
    const auto c = static_cast<std::size_t>(s.center);
    const double dev = s.relative_density - sum[c] / static_cast<double>(count[c]);
    sq[c] += dev * dev;
  }
  CenterSpread spread;
  double total_sq = 0.0;
  for (std::size_t c = 0; c < sq.size(); ++c) {
    spread.per_center.push_back(count[c] ? std::sqrt(sq[c] / static_cast<double>(count[c])) : 0.0);
    total_sq += sq[c];
  }
  spread.pooled = samples.empty() ? 0.0 : std::sqrt(total_sq / static_cast<double>(samples.size()));
  return spread;
}

OptimizeResult optimize_scales(std::span<const RegionPartition> partitions,
                               const GroupModel& model, const CenterBank& bank,
                               const OptimizerConfig& config,
                               const RepredictionLoss& reprediction) {
  config.validate();
  model.validate();
  bank.validate();
  if (bank.C() != model.C) {
    throw std::invalid_argument("optimize_scales: bank has " + std::to_string(bank.C()) +
                                " centers but the group model selects " +
                                std::to_string(model.C) + " groups");
  }

  OptimizeResult result;
  result.bank = bank;
  std::vector<SelectedRegion> selected;
  for (std::size_t img = 0; img < partitions.size(); ++img) {
    const auto& p = partitions[img];
    auto field = ScaleField::identity(p.K);
    const auto sel = select_dense(p, model);
    for (std::size_t i = 0; i < p.regions.size(); ++i) {
      if (!sel.selected[i]) continue;
      field.selected[i] = true;
      field.center[i] = sel.center[i];
      const double c0 = bank.centers[static_cast<std::size_t>(*sel.center[i])];
      // Ratio 1 may sit outside custom bounds.
      field.ratios[i] = std::clamp(1.0, config.r_min, config.r_max);
      selected.push_back({img, i, p.regions[i].mean_density, *sel.center[i], c0 * c0});
    }
    result.fields.push_back(std::move(field));
  }

  const bool with_reprediction = static_cast<bool>(reprediction);
  const auto objective = [&](const SelectedRegion& s, double ratio, double center) {
    const double res = relative_density(s.mean_density, ratio) - center;
    if (!with_reprediction) return res * res;
    return config.lambda1 * reprediction(s.image, s.region, ratio) + config.lambda2 * res * res;
  };
  const auto gradient = [&](const SelectedRegion& s, double ratio, double center) {
    const double gc = grad_center_loss_wrt_ratio(s.mean_density, ratio, center);
    if (!with_reprediction) return gc;
    const double h = config.fd_step;
    const double lo = std::max(ratio - h, config.r_min);
    const double hi = std::min(ratio + h, config.r_max);
    double gr = 0.0;
    if (hi > lo) {
      gr = (reprediction(s.image, s.region, hi) - reprediction(s.image, s.region, lo)) / (hi - lo);
    }
    return config.lambda1 * gr + config.lambda2 * gc;
  };

  bool crossing_reported = false;
  std::vector<CenterSample> samples(selected.size());
  for (int it = 0; it < config.iterations; ++it) {
    for (std::size_t k = 0; k < selected.size(); ++k) {
      const auto& s = selected[k];
      double& ratio = result.fields[s.image].ratios[s.region];
      const double center = result.bank.centers[static_cast<std::size_t>(s.center)];
      const double g = gradient(s, ratio, center);
      if (g == 0.0) continue;
      const double current = objective(s, ratio, center);
      double step = config.step_size / std::max(s.scale, kMinCenter * kMinCenter);
      for (int b = 0; b <= config.max_backtracks; ++b, step *= 0.5) {
        const double trial = std::clamp(ratio - step * g, config.r_min, config.r_max);
        if (objective(s, trial, center) <= current) {
          ratio = trial;
          break;
        }
      }
    }

    for (std::size_t k = 0; k < selected.size(); ++k) {
      const auto& s = selected[k];
      samples[k] = {relative_density(s.mean_density, result.fields[s.image].ratios[s.region]),
                    s.center};
    }
    result.bank = update_centers(samples, result.bank);
    if (!crossing_reported && !result.bank.ascending()) {
      result.warnings.push_back("centers lost ascending order at iteration " + std::to_string(it));
      crossing_reported = true;
    }

    TraceRow row;
    row.iteration = it;
    row.center_loss = center_loss(samples, result.bank);
    if (with_reprediction) {
      for (const auto& s : selected) {
        row.reprediction_loss +=
            reprediction(s.image, s.region, result.fields[s.image].ratios[s.region]);
      }
    }
    row.centers = result.bank.centers;
    result.trace.push_back(std::move(row));
  }
  return result;
}

RatioSearch optimize_ratio(const std::function<double(double)>& objective,
                           const OptimizerConfig& config, int starts) {
  config.validate();
  if (starts < 1) throw std::invalid_argument("optimize_ratio: starts must be >= 1");
  const double span = config.r_max - config.r_min;
  const auto slope = [&](double r) {
    const double lo = std::max(r - config.fd_step, config.r_min);
    const double hi = std::min(r + config.fd_step, config.r_max);
    return hi > lo ? (objective(hi) - objective(lo)) / (hi - lo) : 0.0;
  };

  RatioSearch best;
  for (int s = 0; s < starts; ++s) {
    double r = starts == 1 ? config.r_min : config.r_min + span * s / (starts - 1);
    double value = objective(r);
    if (s == 0) {
      best = {r, value, value};
    }
    for (int it = 0; it < config.iterations; ++it) {
      const double g = slope(r);
      if (g == 0.0) break;
      double step = config.step_size;
      bool moved = false;
      for (int b = 0; b <= config.max_backtracks; ++b, step *= 0.5) {
        const double trial = std::clamp(r - step * g, config.r_min, config.r_max);
        if (trial == r) break;
        const double v = objective(trial);
        if (v < value) {
          r = trial;
          value = v;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    if (value < best.objective || (value == best.objective && r < best.ratio)) {
      best.ratio = r;
      best.objective = value;
    }
  }
  return best;
}

}  // namespace l2sm
