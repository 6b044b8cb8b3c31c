#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "l2sm/io.hpp"

using namespace l2sm;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const char* tag) {
  const fs::path dir = fs::temp_directory_path() / (std::string("l2sm_io_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

DensityGrid awkward_grid() {
  return DensityGrid(3, 2, {0.0, 0.1, 1.0 / 3.0, 1e-300, 12345.678901234567, 5e-324});
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("doubles print shortest and round-trip") {
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(3.0) == "3");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) / 7.0;
    CHECK(std::stod(io::format_double(v)) == v);
  }
}

TEST_CASE("annotation round-trip") {
  const AnnotatedImage img{40, 30, {{1.5, 2.25}, {39.999, 0.0}, {1.0 / 3.0, 29.1}}};
  const auto text = io::format_annotation(img);
  const auto back = io::parse_annotation(text);
  CHECK(back == img);
  CHECK(io::format_annotation(back) == text);
}

TEST_CASE("annotation errors") {
  CHECK_THROWS_AS(io::parse_annotation("{"), io::FormatError);
  CHECK_THROWS_AS(io::parse_annotation(R"({"width": 5, "height": 5})"), io::FormatError);
  CHECK_THROWS_AS(io::parse_annotation(R"({"width": 5, "height": 5, "heads": [[1]]})"), io::FormatError);
  CHECK_THROWS_AS(io::parse_annotation(R"({"width": 5, "height": 5, "heads": [[5, 1]]})"), io::FormatError);
  CHECK_THROWS_AS(io::parse_annotation(R"({"width": "5", "height": 5, "heads": []})"), io::FormatError);
}

TEST_CASE("grid text and binary round-trip") {
  const auto g = awkward_grid();
  const auto text = io::format_dgrid_text(g);
  CHECK(text.rfind("DGRID 3 2\n", 0) == 0);
  CHECK(io::parse_dgrid(text) == g);
  CHECK(io::format_dgrid_text(io::parse_dgrid(text)) == text);

  const auto bin = io::format_dgrid_binary(g);
  CHECK(bin.size() == 12 + 6 * 8);
  CHECK(bin.substr(0, 4) == "DG01");
  CHECK(static_cast<unsigned char>(bin[4]) == 3);
  CHECK(bin[5] == 0);
  CHECK(static_cast<unsigned char>(bin[8]) == 2);
  CHECK(io::parse_dgrid(bin) == g);
  CHECK(io::format_dgrid_binary(io::parse_dgrid(bin)) == bin);
}

TEST_CASE("grid errors") {
  CHECK_THROWS_AS(io::parse_dgrid("DGRID 2 2\n1 2\n3\n"), io::FormatError);
  CHECK_THROWS_AS(io::parse_dgrid("DGRID 1 1\n-1\n"), io::FormatError);
  CHECK_THROWS_AS(io::parse_dgrid("GRID 1 1\n1\n"), io::FormatError);
  std::string truncated = io::format_dgrid_binary(awkward_grid());
  truncated.pop_back();
  CHECK_THROWS_AS(io::parse_dgrid(truncated), io::FormatError);
}

TEST_CASE("grid files pick their encoding from the extension") {
  const auto dir = scratch_dir("grid");
  const auto g = awkward_grid();
  io::write_dgrid(dir / "a.dgb", g);
  io::write_dgrid(dir / "a.dgrid", g);
  CHECK(io::read_file(dir / "a.dgb").substr(0, 4) == "DG01");
  CHECK(io::read_file(dir / "a.dgrid").substr(0, 5) == "DGRID");
  CHECK(io::read_dgrid(dir / "a.dgb") == io::read_dgrid(dir / "a.dgrid"));
  CHECK_FALSE(fs::exists(dir / "a.dgb.tmp"));
  CHECK_THROWS_AS(io::read_file(dir / "missing.json"), io::FormatError);
  CHECK_THROWS_AS(io::write_file_atomic(dir / "no" / "such" / "dir.json", "x"), io::FormatError);
  fs::remove_all(dir);
}

TEST_CASE("pgm scales to the maximum") {
  const DensityGrid g(3, 1, {0.0, 0.5, 2.0});
  const auto pgm = io::format_pgm(g);
  const std::string header = "P5\n3 1\n255\n";
  REQUIRE(pgm.size() == header.size() + 3);
  CHECK(pgm.substr(0, header.size()) == header);
  CHECK(static_cast<unsigned char>(pgm[header.size()]) == 0);
  CHECK(static_cast<unsigned char>(pgm[header.size() + 1]) == 64);
  CHECK(static_cast<unsigned char>(pgm[header.size() + 2]) == 255);
}

TEST_CASE("scene spec round-trip") {
  SyntheticSceneSpec s;
  s.width = 70;
  s.height = 50;
  s.seed = 123456789012345ULL;
  s.intensity = Intensity::tiles(2, 1, {0.01, 0.2});
  auto text = io::format_scene_spec(s);
  CHECK(io::format_scene_spec(io::parse_scene_spec(text)) == text);
  s.intensity = Intensity::linear(0.0, 0.3, Intensity::Axis::y);
  text = io::format_scene_spec(s);
  CHECK(io::format_scene_spec(io::parse_scene_spec(text)) == text);

  const auto c = io::parse_scene_spec(
      R"({"width": 10, "height": 10, "intensity": {"kind": "constant", "level": 0.5}})");
  CHECK(expected_count(c) == doctest::Approx(50.0));
  CHECK_THROWS_AS(io::parse_scene_spec(R"({"width": 10, "height": 10, "intensity": {"kind": "x"}})"),
                  io::FormatError);
}

TEST_CASE("groups, bank, predictor and settings round-trip") {
  io::GroupsFile g;
  g.K = 3;
  g.model = GroupModel{5, 3, {0.001, 0.01, 0.0123, 0.5}};
  g.kernel.beta = 0.25;
  const auto gt = io::format_groups(g);
  const auto gb = io::parse_groups(gt);
  CHECK(gb.model == g.model);
  CHECK(gb.kernel == g.kernel);
  CHECK(io::format_groups(gb) == gt);
  CHECK_THROWS_AS(io::parse_groups(R"({"G": 5, "C": 3, "boundaries": [1, 2]})"), io::FormatError);

  const CenterBank bank{{0.1, 0.2, 0.7}, 0.5};
  CHECK(io::parse_center_bank(io::format_center_bank(bank)) == bank);

  PredictorConfig p;
  p.kind = PredictorConfig::Kind::smooth_baseline;
  p.blur_sigma = 2.5;
  p.seed = 9;
  CHECK(io::parse_predictor_config(io::format_predictor_config(p)) == p);
  CHECK_THROWS_AS(io::parse_predictor_config(R"({"kind": "cnn"})"), io::FormatError);

  io::OptimizeSettings s;
  s.optimizer.iterations = 42;
  s.optimizer.r_max = 3;
  const auto st = io::format_optimize_settings(s);
  CHECK(io::format_optimize_settings(io::parse_optimize_settings(st)) == st);
  s.predictor = p;
  const auto sp = io::parse_optimize_settings(io::format_optimize_settings(s));
  CHECK(sp.predictor == p);
  CHECK(io::parse_optimize_settings("{}").optimizer == OptimizerConfig{});
  CHECK_THROWS_AS(io::parse_optimize_settings(R"({"iterations": -1})"), io::FormatError);
}

TEST_CASE("scales round-trip") {
  io::ScalesFile s;
  s.K = 2;
  s.bank = {{0.5, 1.5}, 0.5};
  auto f = ScaleField::identity(2);
  f.selected[1] = true;
  f.center[1] = 1;
  f.ratios[1] = 1.7320508075688772;
  s.fields = {f, ScaleField::identity(2)};
  const auto text = io::format_scales(s);
  const auto back = io::parse_scales(text);
  CHECK(back.fields == s.fields);
  CHECK(back.bank == s.bank);
  CHECK(io::format_scales(back) == text);
}

TEST_CASE("trace csv layout") {
  const std::vector<TraceRow> t{{0, 2.5, 0.0, {1.0, 2.0}}, {1, 1.25, 0.5, {1.5, 2.0}}};
  CHECK(io::format_trace_csv(t) == "iteration,L_c,L_r,center_0,center_1\n0,2.5,0,1,2\n1,1.25,0.5,1.5,2\n");
}

TEST_CASE("report round-trip") {
  io::PipelineReport r;
  const std::vector<CountPair> p{{10, 12}, {20, 16}};
  r.eval = evaluate(p);
  r.eval.per_group = {1.0, std::nullopt, 0.25};
  r.loss = total_loss(1.5, 0.25, 3.0, 1.0, 0.01);
  r.names = {"a.json", "b.json"};
  const auto text = io::format_report_json(r);
  CHECK(io::format_report_json(io::parse_report_json(text)) == text);
  CHECK(io::format_report_csv(r) == "image,name,count,predicted,abs_error\n0,a.json,10,12,2\n1,b.json,20,16,4\n");
  CHECK(io::format_report_table(r).find("MAE") != std::string::npos);
}

TEST_CASE("manifest round-trip") {
  io::DatasetManifest m{"demo", {{"a.json", std::nullopt}, {"sub/b.json", 17.0}}};
  const auto text = io::format_manifest(m);
  const auto back = io::parse_manifest(text);
  REQUIRE(back.entries.size() == 2);
  CHECK(back.entries[1].count == 17.0);
  CHECK(io::format_manifest(back) == text);
  CHECK(io::parse_manifest(R"({"entries": ["x.json"]})").entries[0].annotation == "x.json");
  CHECK_THROWS_AS(io::parse_manifest(R"({"entries": []})"), io::FormatError);
}

}  // TEST_SUITE
