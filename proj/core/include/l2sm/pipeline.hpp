#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "l2sm/io.hpp"

namespace l2sm {

/// An annotated image with its kernel widths and rendered ground truth.
struct PreparedImage {
  std::string name;
  AnnotatedImage image;
  std::vector<double> sigmas;
  DensityGrid gt;
  double truth_count = 0.0;  // head count unless the manifest overrides it
};

PreparedImage prepare_image(std::string name, AnnotatedImage image, const KernelSpec& kernel);

/// Loads every manifest entry (paths relative to the manifest's directory)
/// and renders its ground truth, preserving manifest order.
std::vector<PreparedImage> load_dataset(const std::filesystem::path& manifest_path,
                                        const KernelSpec& kernel);

std::vector<RegionPartition> ground_truth_partitions(const std::vector<PreparedImage>& data, int K);

io::GroupsFile fit_dataset_groups(const std::vector<PreparedImage>& data, int K, int G, int C,
                                  const KernelSpec& kernel);

/// Learns scale ratios on the ground-truth partitions. A predictor in the
/// settings attaches the re-prediction term computed on mass-matched crops.
OptimizeResult optimize_dataset(const std::vector<PreparedImage>& data,
                                const io::GroupsFile& groups, const io::OptimizeSettings& settings);

/// Seed for the predictor noise of one image (region = -1) or one region.
std::uint64_t derive_seed(std::uint64_t base, std::size_t image, long long region);

/// Inference: initial prediction, dense-region selection on the predicted
/// densities, zoomed re-prediction with the learned ratios, count-preserving
/// downscale, assembly and evaluation against the true counts.
io::PipelineReport run_pipeline(const std::vector<PreparedImage>& data,
                                const io::GroupsFile& groups, const io::ScalesFile& scales,
                                const PredictorConfig& predictor, double lambda2 = 0.01);

}  // namespace l2sm
