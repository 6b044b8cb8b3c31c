#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "l2sm/density.hpp"
#include "l2sm/evaluation.hpp"
#include "l2sm/mpcl.hpp"
#include "l2sm/predictor.hpp"
#include "l2sm/regions.hpp"
#include "l2sm/scene.hpp"

namespace l2sm::io {

/// Malformed input file or failed filesystem operation.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raw file access. write_file_atomic writes to a sibling temporary and
// renames it over `path`, so readers never observe a truncated file.
std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// Annotation: {"width": int, "height": int, "heads": [[x, y], ...]}
std::string format_annotation(const AnnotatedImage& img);
AnnotatedImage parse_annotation(std::string_view text);

// Density grids. Text: "DGRID w h" then one line of values per row. Binary:
// "DG01", u32 width, u32 height (little-endian), then f64 values row-major.
std::string format_dgrid_text(const DensityGrid& grid);
std::string format_dgrid_binary(const DensityGrid& grid);
DensityGrid parse_dgrid(std::string_view bytes);  // detects either variant

/// Binary when the path ends in ".dgb", text otherwise.
void write_dgrid(const std::filesystem::path& path, const DensityGrid& grid);
DensityGrid read_dgrid(const std::filesystem::path& path);

/// 8-bit binary PGM (P5) scaled so the grid maximum maps to 255.
std::string format_pgm(const DensityGrid& grid);

// Synthetic scene specification.
std::string format_scene_spec(const SyntheticSceneSpec& spec);
SyntheticSceneSpec parse_scene_spec(std::string_view text);

// groups.json: {"G", "C", "boundaries", "K"}
struct GroupsFile {
  int K = 4;
  GroupModel model;
  KernelSpec kernel;
};
std::string format_groups(const GroupsFile& groups);
GroupsFile parse_groups(std::string_view text);

std::string format_center_bank(const CenterBank& bank);
CenterBank parse_center_bank(std::string_view text);

std::string format_predictor_config(const PredictorConfig& config);
PredictorConfig parse_predictor_config(std::string_view text);

/// opt.json: optimizer settings plus an optional predictor that attaches
/// the re-prediction term.
struct OptimizeSettings {
  OptimizerConfig optimizer;
  std::optional<PredictorConfig> predictor;
};
std::string format_optimize_settings(const OptimizeSettings& settings);
OptimizeSettings parse_optimize_settings(std::string_view text);

// scales.json: learned ratios per image plus the final centers.
struct ScalesFile {
  int K = 4;
  CenterBank bank;
  std::vector<ScaleField> fields;
};
std::string format_scales(const ScalesFile& scales);
ScalesFile parse_scales(std::string_view text);

/// trace.csv: iteration, L_c, L_r, then one column per center.
std::string format_trace_csv(const std::vector<TraceRow>& trace);

struct PipelineReport {
  EvalReport eval;
  LossReport loss;
  std::vector<std::string> names;  // per image, manifest order
};
std::string format_report_json(const PipelineReport& report);
PipelineReport parse_report_json(std::string_view text);
std::string format_report_csv(const PipelineReport& report);
/// Fixed-width summary for terminals.
std::string format_report_table(const PipelineReport& report);

struct ManifestEntry {
  std::string annotation;          // as written in the manifest
  std::optional<double> count;     // overrides the head count as ground truth
};

struct DatasetManifest {
  std::string name;
  std::vector<ManifestEntry> entries;
};
std::string format_manifest(const DatasetManifest& manifest);
DatasetManifest parse_manifest(std::string_view text);

}  // namespace l2sm::io
