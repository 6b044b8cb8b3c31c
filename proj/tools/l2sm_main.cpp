// l2sm: command-line front end for the density-map rescaling pipeline.
//
// Every subcommand reads and writes files only; failures print one JSON line
// on stderr ({"error": ..., "command": ..., "message": ...}) and exit nonzero.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "l2sm/io.hpp"
#include "l2sm/pipeline.hpp"

namespace {

using namespace l2sm;

struct KernelFlags {
  KernelSpec spec;

  void add(CLI::App* app) {
    app->add_option("--k", spec.k_neighbors, "nearest neighbours for adaptive sigma");
    app->add_option("--beta", spec.beta, "scale on mean neighbour distance");
    app->add_option("--sigma-default", spec.sigma_default, "sigma for isolated heads (px)");
    app->add_option("--truncation", spec.truncation_radius_sigmas, "kernel radius in sigmas");
  }
};

[[noreturn]] void fail(const std::string& kind, const std::string& command, const std::string& message,
                       int code = 1) {
  nlohmann::json j;
  j["error"] = kind;
  j["command"] = command;
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
  std::exit(code);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-to-scale density map toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "sample a synthetic annotated scene");
  std::string synth_spec, synth_out;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--spec", synth_spec, "scene spec JSON")->required();
  synth->add_option("--out", synth_out, "annotation JSON output")->required();
  synth->add_option("--seed", synth_seed, "override the spec's seed");

  // render
  auto* render = app.add_subcommand("render", "render a ground-truth density grid");
  std::string render_in, render_out;
  KernelFlags render_kernel;
  render->add_option("--in", render_in, "annotation JSON")->required();
  render->add_option("--out", render_out, "grid output (.dgb for binary)")->required();
  render_kernel.add(render);

  // fit-groups
  auto* fit = app.add_subcommand("fit-groups", "fit dataset-level density groups");
  std::string fit_manifest, fit_out;
  int fit_K = 4, fit_G = 5, fit_C = 3;
  KernelFlags fit_kernel;
  fit->add_option("--manifest", fit_manifest, "dataset manifest JSON")->required();
  fit->add_option("--K", fit_K, "regions per axis");
  fit->add_option("--G", fit_G, "density groups");
  fit->add_option("--C", fit_C, "dense groups pulled to centers");
  fit->add_option("--out", fit_out, "groups JSON output")->required();
  fit_kernel.add(fit);

  // optimize
  auto* opt = app.add_subcommand("optimize", "learn per-region scale ratios");
  std::string opt_manifest, opt_groups, opt_config, opt_out, opt_trace;
  opt->add_option("--manifest", opt_manifest, "dataset manifest JSON")->required();
  opt->add_option("--groups", opt_groups, "groups JSON from fit-groups")->required();
  opt->add_option("--config", opt_config, "optimizer config JSON");
  opt->add_option("--out", opt_out, "scales JSON output")->required();
  opt->add_option("--trace", opt_trace, "L_c trace CSV output");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "predict, rescale, assemble and evaluate");
  std::string pipe_manifest, pipe_groups, pipe_scales, pipe_predictor, pipe_out, pipe_csv;
  double pipe_lambda2 = 0.01;
  bool pipe_quiet = false;
  pipe->add_option("--manifest", pipe_manifest, "dataset manifest JSON")->required();
  pipe->add_option("--groups", pipe_groups, "groups JSON")->required();
  pipe->add_option("--scales", pipe_scales, "scales JSON")->required();
  pipe->add_option("--predictor", pipe_predictor, "predictor config JSON")->required();
  pipe->add_option("--out", pipe_out, "report JSON output")->required();
  pipe->add_option("--csv", pipe_csv, "per-image CSV output");
  pipe->add_option("--lambda2", pipe_lambda2, "center-loss weight in the loss report");
  pipe->add_flag("--quiet", pipe_quiet, "do not print the summary table");

  // export-pgm
  auto* pgm = app.add_subcommand("export-pgm", "export a grid as an 8-bit PGM");
  std::string pgm_in, pgm_out;
  pgm->add_option("--in", pgm_in, "grid file")->required();
  pgm->add_option("--out", pgm_out, "PGM output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front();
    fail("usage", sub ? sub->get_name() : "", e.what(), 2);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (*synth) {
      auto spec = io::parse_scene_spec(io::read_file(synth_spec));
      if (synth_seed) spec.seed = *synth_seed;
      io::write_file_atomic(synth_out, io::format_annotation(generate_scene(spec)));
    } else if (*render) {
      const auto img = io::parse_annotation(io::read_file(render_in));
      const auto sigmas = adaptive_sigmas(img, render_kernel.spec);
      io::write_dgrid(render_out, render_density(img, sigmas, render_kernel.spec));
    } else if (*fit) {
      const auto data = load_dataset(fit_manifest, fit_kernel.spec);
      const auto groups = fit_dataset_groups(data, fit_K, fit_G, fit_C, fit_kernel.spec);
      io::write_file_atomic(fit_out, io::format_groups(groups));
    } else if (*opt) {
      const auto groups = io::parse_groups(io::read_file(opt_groups));
      const auto settings = opt_config.empty() ? io::OptimizeSettings{}
                                               : io::parse_optimize_settings(io::read_file(opt_config));
      const auto data = load_dataset(opt_manifest, groups.kernel);
      const auto result = optimize_dataset(data, groups, settings);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      io::ScalesFile scales{groups.K, result.bank, result.fields};
      const std::string scales_text = io::format_scales(scales);
      const std::string trace_text = io::format_trace_csv(result.trace);
      io::write_file_atomic(opt_out, scales_text);
      if (!opt_trace.empty()) io::write_file_atomic(opt_trace, trace_text);
    } else if (*pipe) {
      const auto groups = io::parse_groups(io::read_file(pipe_groups));
      const auto scales = io::parse_scales(io::read_file(pipe_scales));
      const auto predictor = io::parse_predictor_config(io::read_file(pipe_predictor));
      const auto data = load_dataset(pipe_manifest, groups.kernel);
      const auto report = run_pipeline(data, groups, scales, predictor, pipe_lambda2);
      io::write_file_atomic(pipe_out, io::format_report_json(report));
      if (!pipe_csv.empty()) io::write_file_atomic(pipe_csv, io::format_report_csv(report));
      if (!pipe_quiet) std::cout << io::format_report_table(report);
    } else if (*pgm) {
      io::write_file_atomic(pgm_out, io::format_pgm(io::read_dgrid(pgm_in)));
    }
  } catch (const io::FormatError& e) {
    fail("format", command, e.what());
  } catch (const std::invalid_argument& e) {
    fail("invalid_argument", command, e.what());
  } catch (const std::out_of_range& e) {
    fail("out_of_range", command, e.what());
  } catch (const std::exception& e) {
    fail("internal", command, e.what());
  }
  return 0;
}
