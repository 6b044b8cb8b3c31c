#include "l2sm/pipeline.hpp"

#include <map>
#include <stdexcept>

namespace l2sm {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

PredictorConfig with_seed(PredictorConfig config, std::uint64_t seed) {
  config.seed = seed;
  return config;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::size_t image, long long region) {
  std::uint64_t s = splitmix64(base);
  s = splitmix64(s ^ static_cast<std::uint64_t>(image));
  return splitmix64(s ^ static_cast<std::uint64_t>(region + 1));
}

PreparedImage prepare_image(std::string name, AnnotatedImage image, const KernelSpec& kernel) {
  PreparedImage p;
  p.name = std::move(name);
  p.sigmas = adaptive_sigmas(image, kernel);
  p.gt = render_density(image, p.sigmas, kernel);
  p.truth_count = static_cast<double>(image.count());
  p.image = std::move(image);
  return p;
}

std::vector<PreparedImage> load_dataset(const fs::path& manifest_path, const KernelSpec& kernel) {
  const auto manifest = io::parse_manifest(io::read_file(manifest_path));
  const fs::path base = manifest_path.parent_path();
  std::vector<PreparedImage> data;
  data.reserve(manifest.entries.size());
  for (const auto& entry : manifest.entries) {
    fs::path p(entry.annotation);
    if (p.is_relative()) p = base / p;
    auto img = io::parse_annotation(io::read_file(p));
    auto prepared = prepare_image(entry.annotation, std::move(img), kernel);
    if (entry.count) prepared.truth_count = *entry.count;
    data.push_back(std::move(prepared));
  }
  return data;
}

std::vector<RegionPartition> ground_truth_partitions(const std::vector<PreparedImage>& data, int K) {
  std::vector<RegionPartition> out;
  out.reserve(data.size());
  for (const auto& d : data) out.push_back(divide(d.gt, K));
  return out;
}

io::GroupsFile fit_dataset_groups(const std::vector<PreparedImage>& data, int K, int G, int C,
                                  const KernelSpec& kernel) {
  std::vector<double> densities;
  for (const auto& p : ground_truth_partitions(data, K)) {
    for (const auto& r : p.regions) densities.push_back(r.mean_density);
  }
  io::GroupsFile g;
  g.K = K;
  g.model = fit_groups(densities, G, C);
  g.kernel = kernel;
  return g;
}

OptimizeResult optimize_dataset(const std::vector<PreparedImage>& data,
                                const io::GroupsFile& groups, const io::OptimizeSettings& settings) {
  const auto partitions = ground_truth_partitions(data, groups.K);
  const CenterBank bank = init_centers(partitions, groups.model, settings.optimizer.alpha);
  if (!settings.predictor) {
    return optimize_scales(partitions, groups.model, bank, settings.optimizer);
  }

  // Crops are built on first use; only selected regions are ever asked for.
  std::map<std::pair<std::size_t, std::size_t>, RegionCrop> crops;
  const PredictorConfig predictor = *settings.predictor;
  const RepredictionLoss loss = [&](std::size_t image, std::size_t region, double ratio) {
    auto it = crops.find({image, region});
    if (it == crops.end()) {
      const auto& d = data[image];
      it = crops
               .emplace(std::make_pair(image, region),
                        crop_region(d.image, d.sigmas, partitions[image].regions[region].rect,
                                    groups.kernel))
               .first;
    }
    const auto cfg = with_seed(predictor, derive_seed(predictor.seed, image,
                                                      static_cast<long long>(region)));
    return reprediction_loss(it->second, ratio, cfg, groups.kernel);
  };
  return optimize_scales(partitions, groups.model, bank, settings.optimizer, loss);
}

io::PipelineReport run_pipeline(const std::vector<PreparedImage>& data,
                                const io::GroupsFile& groups, const io::ScalesFile& scales,
                                const PredictorConfig& predictor, double lambda2) {
  predictor.validate();
  groups.model.validate();
  if (data.empty()) throw std::invalid_argument("pipeline: empty dataset");
  if (scales.fields.size() != data.size()) {
    throw std::invalid_argument("pipeline: scales cover " + std::to_string(scales.fields.size()) +
                                " images but the manifest has " + std::to_string(data.size()));
  }
  if (scales.K != groups.K) {
    throw std::invalid_argument("pipeline: scales use K=" + std::to_string(scales.K) +
                                " but groups use K=" + std::to_string(groups.K));
  }
  if (scales.bank.C() != groups.model.C) {
    throw std::invalid_argument("pipeline: scales carry " + std::to_string(scales.bank.C()) +
                                " centers but groups select C=" + std::to_string(groups.model.C));
  }

  io::PipelineReport report;
  std::vector<CountPair> pairs;
  std::vector<LabeledPair> region_pairs;
  double density_loss = 0.0;
  double reprediction = 0.0;
  double center = 0.0;

  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& d = data[i];
    const auto& field = scales.fields[i];
    const DensityGrid initial =
        predict(d.image, d.gt, with_seed(predictor, derive_seed(predictor.seed, i, -1)));
    density_loss += squared_l2(d.gt, initial);

    const RegionPartition partition = divide(initial, groups.K);
    const DenseSelection sel = select_dense(partition, groups.model);
    std::map<std::size_t, DensityGrid> repredictions;
    for (std::size_t r = 0; r < partition.regions.size(); ++r) {
      if (!sel.selected[r]) continue;
      const auto& rect = partition.regions[r].rect;
      const double ratio = field.ratios[r];
      const RegionCrop crop = crop_region(d.image, d.sigmas, rect, groups.kernel);
      const auto cfg = with_seed(predictor, derive_seed(predictor.seed, i, static_cast<long long>(r)));
      const DensityGrid target = transform_ground_truth(crop, ratio, groups.kernel);
      const DensityGrid scaled = repredict_region(crop, ratio, cfg, groups.kernel);
      reprediction += squared_l2(target, scaled);
      repredictions.emplace(r, count_preserving_downscale(scaled, ratio, rect.width, rect.height));

      const double residual =
          relative_density(partition.regions[r].mean_density, ratio) -
          scales.bank.centers[static_cast<std::size_t>(*sel.center[r])];
      center += residual * residual;
    }
    const DensityGrid final_map = assemble(initial, partition, repredictions);
    pairs.push_back({d.truth_count, integrate(final_map)});
    report.names.push_back(d.name);

    for (const auto& reg : partition.regions) {
      const double truth = integrate_rect(d.gt, reg.rect);
      region_pairs.push_back({{truth, integrate_rect(final_map, reg.rect)},
                              assign_group(truth / reg.area, groups.model)});
    }
  }

  report.eval = evaluate(pairs);
  report.eval.per_group = evaluate_by_group(region_pairs, groups.model.G);
  report.loss = total_loss(density_loss, reprediction, center, 1.0, lambda2);
  return report;
}

}  // namespace l2sm
