#include "l2sm/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <system_error>

#include "json.hpp"

namespace l2sm::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

Json parse_json(std::string_view text, const char* what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::exception& e) {
    throw FormatError(std::string(what) + ": invalid JSON: " + e.what());
  }
}

// Runs a JSON field extraction, turning library and validation errors into
// FormatError.
template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

template <typename T>
T value_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

Json number_or_null(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json kernel_to_json(const KernelSpec& k) {
  Json j;
  j["k_neighbors"] = k.k_neighbors;
  j["beta"] = k.beta;
  j["sigma_default"] = k.sigma_default;
  j["truncation_radius_sigmas"] = k.truncation_radius_sigmas;
  return j;
}

KernelSpec kernel_from_json(const Json& j) {
  KernelSpec k;
  k.k_neighbors = value_or(j, "k_neighbors", k.k_neighbors);
  k.beta = value_or(j, "beta", k.beta);
  k.sigma_default = value_or(j, "sigma_default", k.sigma_default);
  k.truncation_radius_sigmas = value_or(j, "truncation_radius_sigmas", k.truncation_radius_sigmas);
  k.validate();
  return k;
}

Json predictor_to_json(const PredictorConfig& c) {
  Json j;
  j["kind"] = to_string(c.kind);
  j["noise_level"] = c.noise_level;
  j["blur_sigma"] = c.blur_sigma;
  j["seed"] = c.seed;
  return j;
}

PredictorConfig predictor_from_json(const Json& j) {
  PredictorConfig c;
  c.kind = predictor_kind_from_string(value_or<std::string>(j, "kind", "oracle"));
  c.noise_level = value_or(j, "noise_level", c.noise_level);
  c.blur_sigma = value_or(j, "blur_sigma", c.blur_sigma);
  c.seed = value_or<std::uint64_t>(j, "seed", c.seed);
  c.validate();
  return c;
}

Json bank_to_json(const CenterBank& b) {
  Json j;
  j["alpha"] = b.alpha;
  j["centers"] = b.centers;
  return j;
}

CenterBank bank_from_json(const Json& j) {
  CenterBank b;
  b.alpha = value_or(j, "alpha", b.alpha);
  b.centers = j.at("centers").get<std::vector<double>>();
  b.validate();
  return b;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return v;
}

void put_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

double get_f64(std::string_view in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return std::bit_cast<double>(v);
}

std::string_view next_token(std::string_view text, std::size_t& pos) {
  while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  const std::size_t start = pos;
  while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  return text.substr(start, pos - start);
}

template <typename T>
T parse_number(std::string_view token, const char* what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw FormatError(std::string(what) + ": bad number '" + std::string(token) + "'");
  }
  return v;
}

DensityGrid parse_dgrid_text(std::string_view text) {
  std::size_t pos = 0;
  if (next_token(text, pos) != "DGRID") throw FormatError("dgrid: missing DGRID header");
  const int w = parse_number<int>(next_token(text, pos), "dgrid width");
  const int h = parse_number<int>(next_token(text, pos), "dgrid height");
  if (w < 1 || h < 1) throw FormatError("dgrid: non-positive extent");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(w) * h);
  for (;;) {
    const auto tok = next_token(text, pos);
    if (tok.empty()) break;
    values.push_back(parse_number<double>(tok, "dgrid value"));
  }
  if (values.size() != static_cast<std::size_t>(w) * h) {
    throw FormatError("dgrid: expected " + std::to_string(static_cast<std::size_t>(w) * h) +
                      " values, found " + std::to_string(values.size()));
  }
  try {
    return DensityGrid(w, h, std::move(values));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("dgrid: ") + e.what());
  }
}

DensityGrid parse_dgrid_binary(std::string_view bytes) {
  if (bytes.size() < 12) throw FormatError("dgrid binary: truncated header");
  const auto w = get_u32(bytes, 4);
  const auto h = get_u32(bytes, 8);
  if (w < 1 || h < 1 || w > (1u << 30) || h > (1u << 30)) {
    throw FormatError("dgrid binary: bad extent");
  }
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() != 12 + 8 * n) {
    throw FormatError("dgrid binary: expected " + std::to_string(12 + 8 * n) + " bytes, found " +
                      std::to_string(bytes.size()));
  }
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = get_f64(bytes, 12 + 8 * i);
  try {
    return DensityGrid(static_cast<int>(w), static_cast<int>(h), std::move(values));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("dgrid binary: ") + e.what());
  }
}

Json field_to_json(const ScaleField& f) {
  Json j;
  j["ratios"] = f.ratios;
  Json sel = Json::array();
  for (bool b : f.selected) sel.push_back(b);
  j["selected"] = sel;
  Json centers = Json::array();
  for (const auto& c : f.center) centers.push_back(c ? Json(*c) : Json(nullptr));
  j["center"] = centers;
  return j;
}

ScaleField field_from_json(const Json& j, int K) {
  ScaleField f;
  f.K = K;
  f.ratios = j.at("ratios").get<std::vector<double>>();
  for (const auto& b : j.at("selected")) f.selected.push_back(b.get<bool>());
  for (const auto& c : j.at("center")) {
    f.center.push_back(c.is_null() ? std::nullopt : std::optional<int>(c.get<int>()));
  }
  const auto n = static_cast<std::size_t>(K) * K;
  if (f.ratios.size() != n || f.selected.size() != n || f.center.size() != n) {
    throw FormatError("scales: every image needs K*K ratios, flags and centers");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(f.ratios[i] > 0.0)) throw FormatError("scales: ratios must be > 0");
    if (f.selected[i] != f.center[i].has_value()) {
      throw FormatError("scales: selected regions need a center and only they may have one");
    }
  }
  return f;
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw FormatError("failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw FormatError("cannot move output into place at '" + path.string() + "'");
  }
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string format_annotation(const AnnotatedImage& img) {
  Json j;
  j["width"] = img.width;
  j["height"] = img.height;
  Json heads = Json::array();
  for (const auto& h : img.heads) heads.push_back(Json::array({h.x, h.y}));
  j["heads"] = heads;
  return j.dump() + "\n";
}

AnnotatedImage parse_annotation(std::string_view text) {
  const Json j = parse_json(text, "annotation");
  return guarded("annotation", [&] {
    AnnotatedImage img;
    img.width = j.at("width").get<int>();
    img.height = j.at("height").get<int>();
    for (const auto& h : j.at("heads")) {
      if (!h.is_array() || h.size() != 2) throw FormatError("annotation: heads must be [x, y]");
      img.heads.push_back({h.at(0).get<double>(), h.at(1).get<double>()});
    }
    const auto violations = validate_scene(img);
    if (!violations.empty()) throw FormatError("annotation: " + violations.front().message);
    return img;
  });
}

std::string format_dgrid_text(const DensityGrid& grid) {
  std::string out = "DGRID " + std::to_string(grid.width()) + " " + std::to_string(grid.height()) + "\n";
  for (int y = 0; y < grid.height(); ++y) {
    const auto row = grid.row(y);
    for (int x = 0; x < grid.width(); ++x) {
      if (x) out.push_back(' ');
      out += format_double(row[x]);
    }
    out.push_back('\n');
  }
  return out;
}

std::string format_dgrid_binary(const DensityGrid& grid) {
  std::string out = "DG01";
  out.reserve(12 + 8 * grid.size());
  put_u32(out, static_cast<std::uint32_t>(grid.width()));
  put_u32(out, static_cast<std::uint32_t>(grid.height()));
  for (double v : grid.values()) put_f64(out, v);
  return out;
}

DensityGrid parse_dgrid(std::string_view bytes) {
  if (bytes.substr(0, 4) == "DG01") return parse_dgrid_binary(bytes);
  return parse_dgrid_text(bytes);
}

void write_dgrid(const fs::path& path, const DensityGrid& grid) {
  const bool binary = path.extension() == ".dgb";
  write_file_atomic(path, binary ? format_dgrid_binary(grid) : format_dgrid_text(grid));
}

DensityGrid read_dgrid(const fs::path& path) { return parse_dgrid(read_file(path)); }

std::string format_pgm(const DensityGrid& grid) {
  std::string out = "P5\n" + std::to_string(grid.width()) + " " + std::to_string(grid.height()) +
                    "\n255\n";
  const double peak = grid.max_value();
  for (double v : grid.values()) {
    const double scaled = peak > 0.0 ? std::round(255.0 * v / peak) : 0.0;
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(scaled, 0.0, 255.0))));
  }
  return out;
}

std::string format_scene_spec(const SyntheticSceneSpec& spec) {
  Json j;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["seed"] = spec.seed;
  Json in;
  const auto& s = spec.intensity;
  if (s.kind == Intensity::Kind::piecewise) {
    in["kind"] = "piecewise";
    in["tiles_x"] = s.tiles_x;
    in["tiles_y"] = s.tiles_y;
    in["levels"] = s.levels;
  } else {
    in["kind"] = "gradient";
    in["start"] = s.start;
    in["end"] = s.end;
    in["axis"] = s.axis == Intensity::Axis::x ? "x" : "y";
  }
  j["intensity"] = in;
  return dump(j);
}

SyntheticSceneSpec parse_scene_spec(std::string_view text) {
  const Json j = parse_json(text, "scene spec");
  return guarded("scene spec", [&] {
    SyntheticSceneSpec spec;
    spec.width = j.at("width").get<int>();
    spec.height = j.at("height").get<int>();
    spec.seed = value_or<std::uint64_t>(j, "seed", 0);
    const Json& in = j.at("intensity");
    const auto kind = in.at("kind").get<std::string>();
    if (kind == "constant") {
      spec.intensity = Intensity::constant(in.at("level").get<double>());
    } else if (kind == "piecewise") {
      spec.intensity = Intensity::tiles(value_or(in, "tiles_x", 1), value_or(in, "tiles_y", 1),
                                        in.at("levels").get<std::vector<double>>());
    } else if (kind == "gradient") {
      const auto axis = value_or<std::string>(in, "axis", "x");
      if (axis != "x" && axis != "y") throw FormatError("scene spec: axis must be x or y");
      spec.intensity = Intensity::linear(in.at("start").get<double>(), in.at("end").get<double>(),
                                         axis == "x" ? Intensity::Axis::x : Intensity::Axis::y);
    } else {
      throw FormatError("scene spec: unknown intensity kind '" + kind + "'");
    }
    return spec;
  });
}

std::string format_groups(const GroupsFile& groups) {
  Json j;
  j["G"] = groups.model.G;
  j["C"] = groups.model.C;
  j["boundaries"] = groups.model.boundaries;
  j["K"] = groups.K;
  j["kernel"] = kernel_to_json(groups.kernel);
  return dump(j);
}

GroupsFile parse_groups(std::string_view text) {
  const Json j = parse_json(text, "groups");
  return guarded("groups", [&] {
    GroupsFile g;
    g.model.G = j.at("G").get<int>();
    g.model.C = j.at("C").get<int>();
    g.model.boundaries = j.at("boundaries").get<std::vector<double>>();
    g.K = value_or(j, "K", 4);
    if (j.contains("kernel")) g.kernel = kernel_from_json(j.at("kernel"));
    try {
      g.model.validate();
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("groups: ") + e.what());
    }
    if (g.K < 1) throw FormatError("groups: K must be >= 1");
    return g;
  });
}

std::string format_center_bank(const CenterBank& bank) { return dump(bank_to_json(bank)); }

CenterBank parse_center_bank(std::string_view text) {
  const Json j = parse_json(text, "center bank");
  return guarded("center bank", [&] { return bank_from_json(j); });
}

std::string format_predictor_config(const PredictorConfig& config) {
  return dump(predictor_to_json(config));
}

PredictorConfig parse_predictor_config(std::string_view text) {
  const Json j = parse_json(text, "predictor");
  return guarded("predictor", [&] { return predictor_from_json(j); });
}

std::string format_optimize_settings(const OptimizeSettings& s) {
  const auto& c = s.optimizer;
  Json j;
  j["step_size"] = c.step_size;
  j["iterations"] = c.iterations;
  j["lambda1"] = c.lambda1;
  j["lambda2"] = c.lambda2;
  j["r_min"] = c.r_min;
  j["r_max"] = c.r_max;
  j["alpha"] = c.alpha;
  j["max_backtracks"] = c.max_backtracks;
  j["fd_step"] = c.fd_step;
  if (s.predictor) j["predictor"] = predictor_to_json(*s.predictor);
  return dump(j);
}

OptimizeSettings parse_optimize_settings(std::string_view text) {
  const Json j = parse_json(text, "optimizer config");
  return guarded("optimizer config", [&] {
    OptimizeSettings s;
    auto& c = s.optimizer;
    c.step_size = value_or(j, "step_size", c.step_size);
    c.iterations = value_or(j, "iterations", c.iterations);
    c.lambda1 = value_or(j, "lambda1", c.lambda1);
    c.lambda2 = value_or(j, "lambda2", c.lambda2);
    c.r_min = value_or(j, "r_min", c.r_min);
    c.r_max = value_or(j, "r_max", c.r_max);
    c.alpha = value_or(j, "alpha", c.alpha);
    c.max_backtracks = value_or(j, "max_backtracks", c.max_backtracks);
    c.fd_step = value_or(j, "fd_step", c.fd_step);
    if (j.contains("predictor") && !j.at("predictor").is_null()) {
      s.predictor = predictor_from_json(j.at("predictor"));
    }
    c.validate();
    return s;
  });
}

std::string format_scales(const ScalesFile& scales) {
  Json j;
  j["K"] = scales.K;
  j["alpha"] = scales.bank.alpha;
  j["centers"] = scales.bank.centers;
  Json images = Json::array();
  for (const auto& f : scales.fields) images.push_back(field_to_json(f));
  j["images"] = images;
  return dump(j);
}

ScalesFile parse_scales(std::string_view text) {
  const Json j = parse_json(text, "scales");
  return guarded("scales", [&] {
    ScalesFile s;
    s.K = j.at("K").get<int>();
    if (s.K < 1) throw FormatError("scales: K must be >= 1");
    s.bank = bank_from_json(j);
    for (const auto& img : j.at("images")) s.fields.push_back(field_from_json(img, s.K));
    for (const auto& f : s.fields) {
      for (const auto& c : f.center) {
        if (c && (*c < 0 || *c >= s.bank.C())) throw FormatError("scales: center index out of range");
      }
    }
    return s;
  });
}

std::string format_trace_csv(const std::vector<TraceRow>& trace) {
  std::string out = "iteration,L_c,L_r";
  const std::size_t C = trace.empty() ? 0 : trace.front().centers.size();
  for (std::size_t c = 0; c < C; ++c) out += ",center_" + std::to_string(c);
  out.push_back('\n');
  for (const auto& row : trace) {
    out += std::to_string(row.iteration) + "," + format_double(row.center_loss) + "," +
           format_double(row.reprediction_loss);
    for (double c : row.centers) out += "," + format_double(c);
    out.push_back('\n');
  }
  return out;
}

std::string format_report_json(const PipelineReport& r) {
  Json j;
  j["M"] = r.eval.M;
  j["mae"] = r.eval.mae;
  j["mse"] = r.eval.mse;
  j["mre"] = number_or_null(r.eval.mre);
  Json images = Json::array();
  for (std::size_t i = 0; i < r.eval.per_image.size(); ++i) {
    const auto& e = r.eval.per_image[i];
    Json row;
    row["name"] = i < r.names.size() ? r.names[i] : std::string();
    row["count"] = e.truth;
    row["predicted"] = e.predicted;
    row["abs_error"] = e.abs_error;
    images.push_back(row);
  }
  j["per_image"] = images;
  Json groups = Json::array();
  for (const auto& g : r.eval.per_group) groups.push_back(number_or_null(g));
  j["per_group_mae"] = groups;
  Json loss;
  loss["L_D"] = r.loss.density_loss;
  loss["L_r"] = r.loss.reprediction_loss;
  loss["L_c"] = r.loss.center_loss;
  loss["lambda1"] = r.loss.lambda1;
  loss["lambda2"] = r.loss.lambda2;
  loss["total"] = r.loss.total;
  j["loss"] = loss;
  return dump(j);
}

PipelineReport parse_report_json(std::string_view text) {
  const Json j = parse_json(text, "report");
  return guarded("report", [&] {
    PipelineReport r;
    r.eval.M = j.at("M").get<std::size_t>();
    r.eval.mae = j.at("mae").get<double>();
    r.eval.mse = j.at("mse").get<double>();
    if (!j.at("mre").is_null()) r.eval.mre = j.at("mre").get<double>();
    for (const auto& row : j.at("per_image")) {
      r.names.push_back(row.at("name").get<std::string>());
      r.eval.per_image.push_back({row.at("count").get<double>(), row.at("predicted").get<double>(),
                                  row.at("abs_error").get<double>()});
    }
    for (const auto& g : j.at("per_group_mae")) {
      r.eval.per_group.push_back(g.is_null() ? std::nullopt : std::optional<double>(g.get<double>()));
    }
    const Json& loss = j.at("loss");
    r.loss.density_loss = loss.at("L_D").get<double>();
    r.loss.reprediction_loss = loss.at("L_r").get<double>();
    r.loss.center_loss = loss.at("L_c").get<double>();
    r.loss.lambda1 = loss.at("lambda1").get<double>();
    r.loss.lambda2 = loss.at("lambda2").get<double>();
    r.loss.total = loss.at("total").get<double>();
    return r;
  });
}

std::string format_report_csv(const PipelineReport& r) {
  std::string out = "image,name,count,predicted,abs_error\n";
  for (std::size_t i = 0; i < r.eval.per_image.size(); ++i) {
    const auto& e = r.eval.per_image[i];
    out += std::to_string(i) + "," + (i < r.names.size() ? r.names[i] : std::string()) + "," +
           format_double(e.truth) + "," + format_double(e.predicted) + "," +
           format_double(e.abs_error) + "\n";
  }
  return out;
}

std::string format_report_table(const PipelineReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << std::left << std::setw(8) << "image" << std::right << std::setw(14) << "count"
     << std::setw(14) << "predicted" << std::setw(14) << "abs_error" << "\n";
  for (std::size_t i = 0; i < r.eval.per_image.size(); ++i) {
    const auto& e = r.eval.per_image[i];
    os << std::left << std::setw(8) << i << std::right << std::setw(14) << e.truth << std::setw(14)
       << e.predicted << std::setw(14) << e.abs_error << "\n";
  }
  os << std::left << std::setw(8) << "MAE" << std::right << std::setw(14) << r.eval.mae << "\n";
  os << std::left << std::setw(8) << "MSE" << std::right << std::setw(14) << r.eval.mse << "\n";
  os << std::left << std::setw(8) << "MRE" << std::right << std::setw(14);
  if (r.eval.mre) {
    os << *r.eval.mre;
  } else {
    os << "n/a";
  }
  os << "\n";
  return os.str();
}

std::string format_manifest(const DatasetManifest& m) {
  Json j;
  j["name"] = m.name;
  Json entries = Json::array();
  for (const auto& e : m.entries) {
    Json row;
    row["annotation"] = e.annotation;
    if (e.count) row["count"] = *e.count;
    entries.push_back(row);
  }
  j["entries"] = entries;
  return dump(j);
}

DatasetManifest parse_manifest(std::string_view text) {
  const Json j = parse_json(text, "manifest");
  return guarded("manifest", [&] {
    DatasetManifest m;
    m.name = value_or<std::string>(j, "name", "");
    for (const auto& e : j.at("entries")) {
      ManifestEntry entry;
      if (e.is_string()) {
        entry.annotation = e.get<std::string>();
      } else {
        entry.annotation = e.at("annotation").get<std::string>();
        if (e.contains("count") && !e.at("count").is_null()) entry.count = e.at("count").get<double>();
      }
      if (entry.annotation.empty()) throw FormatError("manifest: empty annotation path");
      m.entries.push_back(std::move(entry));
    }
    if (m.entries.empty()) throw FormatError("manifest: no entries");
    return m;
  });
}

}  // namespace l2sm::io
