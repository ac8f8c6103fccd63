#include "mss/io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mss/error.hpp"
#include "mss/rng.hpp"

namespace mss {

std::string to_string(ProvenanceKind k) {
  switch (k) {
    case ProvenanceKind::Null:
      return "null";
    case ProvenanceKind::Embedded:
      return "embedded";
    case ProvenanceKind::External:
      return "external";
  }
  throw ValidationError("unknown provenance kind");
}

ProvenanceKind provenance_from_string(const std::string& s) {
  if (s == "null") return ProvenanceKind::Null;
  if (s == "embedded") return ProvenanceKind::Embedded;
  if (s == "external") return ProvenanceKind::External;
  throw ValidationError("unknown provenance: " + s);
}

void TensorField::validate() const {
  geom.validate();
  if (static_cast<std::int64_t>(values.size()) != geom.cell_count())
    throw ValidationError("tensor value count does not match its geometry");
}

namespace {

constexpr char kMagic[4] = {'M', 'S', 'S', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

void write_tensor(const TensorField& X, const std::string& path) {
  X.validate();
  const auto cells = static_cast<std::uint64_t>(X.geom.cells_per_axis());

  std::string buf;
  buf.reserve(16 + 8 * static_cast<std::size_t>(X.geom.d) + 8 * X.values.size());
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<std::uint32_t>(X.geom.d));
  put_u32(buf, static_cast<std::uint32_t>(X.geom.R));
  for (int j = 0; j < X.geom.d; ++j) put_u64(buf, cells);
  for (double v : X.values) put_u64(buf, std::bit_cast<std::uint64_t>(v));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFault("cannot open for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw RuntimeFault("write failed: " + path);
}

TensorField read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("missing tensor file: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  const std::size_t size = buf.size();

  if (size < 16) throw ValidationError("truncated tensor header: " + path);
  if (std::memcmp(p, kMagic, 4) != 0) throw ValidationError("bad tensor magic: " + path);
  // A byte-swapped (big-endian) writer scrambles the version field, so this
  // check also rejects foreign byte order.
  const auto version = get_u32(p + 4);
  if (version != kVersion)
    throw ValidationError("unsupported tensor version " + std::to_string(version) + ": " + path);
  const auto d = get_u32(p + 8);
  const auto R = get_u32(p + 12);
  if (d < 1 || d > 8) throw ValidationError("tensor rank out of range: " + path);
  if (R < 1 || R > (1u << 30)) throw ValidationError("tensor resolution out of range: " + path);

  const std::size_t header = 16 + 8 * static_cast<std::size_t>(d);
  if (size < header) throw ValidationError("truncated tensor header: " + path);
  std::uint64_t cells = 0;
  for (std::uint32_t j = 0; j < d; ++j) {
    const auto c = get_u64(p + 16 + 8 * j);
    if (j == 0)
      cells = c;
    else if (c != cells)
      throw ValidationError("anisotropic cell counts are not supported: " + path);
  }
  if (cells == 0 || cells % 2 != 0) throw ValidationError("cell count must be even: " + path);
  if (cells > 1000000000ull) throw ValidationError("tensor geometry overflow: " + path);

  TensorField X;
  X.geom.d = static_cast<int>(d);
  X.geom.R = static_cast<int>(R);
  X.geom.L = static_cast<double>(cells) / (2.0 * static_cast<double>(R));
  X.geom.validate();
  if (static_cast<std::uint64_t>(X.geom.cells_per_axis()) != cells)
    throw ValidationError("tensor geometry overflow: " + path);

  const auto count = static_cast<std::uint64_t>(X.geom.cell_count());
  const std::size_t expect = header + 8 * count;
  if (size < expect) throw ValidationError("truncated tensor payload: " + path);
  if (size > expect) throw ValidationError("trailing bytes after tensor payload: " + path);

  X.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i)
    X.values[i] = std::bit_cast<double>(get_u64(p + header + 8 * i));
  X.prov.kind = ProvenanceKind::External;
  return X;
}

std::string geometry_hash(const Geometry& g) {
  std::uint64_t h = mix64(0x4d535354ull);
  h = mix64(h ^ static_cast<std::uint64_t>(g.d));
  h = mix64(h ^ std::bit_cast<std::uint64_t>(g.L));
  h = mix64(h ^ static_cast<std::uint64_t>(g.R));
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

json to_json(const Geometry& g) { return json{{"L", g.L}, {"R", g.R}, {"d", g.d}}; }

Geometry geometry_from_json(const json& j) {
  Geometry g;
  g.d = j.at("d").get<int>();
  g.L = j.at("L").get<double>();
  g.R = j.at("R").get<int>();
  g.validate();
  return g;
}

json to_json(const GroundTruth& t) {
  return json{{"h", t.h}, {"mu", t.mu}, {"pattern", t.pattern}, {"t", t.t}};
}

GroundTruth ground_truth_from_json(const json& j) {
  GroundTruth t;
  t.pattern = j.at("pattern").get<std::string>();
  t.mu = j.at("mu").get<double>();
  t.t = j.at("t").get<std::vector<double>>();
  t.h = j.at("h").get<std::vector<double>>();
  return t;
}

void write_manifest(const Manifest& m, const std::string& path) {
  json tensors = json::array();
  for (const auto& e : m.entries) {
    json entry{{"path", e.path}, {"provenance", to_string(e.prov.kind)}};
    if (e.prov.truth) entry["ground_truth"] = to_json(*e.prov.truth);
    tensors.push_back(entry);
  }
  json j{{"geometry", to_json(m.geom)},
         {"indices", m.indices},
         {"seed", m.seed},
         {"tensors", tensors}};
  write_text_file(path, dump_json(j));
}

Manifest read_manifest(const std::string& path) {
  const json j = read_json_file(path);
  Manifest m;
  m.geom = geometry_from_json(j.at("geometry"));
  m.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("indices")) m.indices = j.at("indices").get<std::vector<std::uint64_t>>();
  for (const auto& entry : j.at("tensors")) {
    ManifestEntry e;
    e.path = entry.at("path").get<std::string>();
    e.prov.kind = provenance_from_string(entry.at("provenance").get<std::string>());
    if (entry.contains("ground_truth"))
      e.prov.truth = ground_truth_from_json(entry.at("ground_truth"));
    m.entries.push_back(std::move(e));
  }
  return m;
}

std::vector<TensorField> load_manifest_tensors(const Manifest& m,
                                               const std::string& manifest_path) {
  const auto base = std::filesystem::path(manifest_path).parent_path();
  std::vector<TensorField> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) {
    std::filesystem::path p(e.path);
    if (p.is_relative()) p = base / p;
    TensorField X = read_tensor(p.string());
    if (!(X.geom == m.geom))
      throw ValidationError("tensor geometry differs from the manifest: " + e.path);
    X.prov = e.prov;
    out.push_back(std::move(X));
  }
  return out;
}

json to_json(const NetGroup& g) {
  return json{{"count", g.count()}, {"h", g.h}, {"kmax", g.kmax}, {"spacing", g.spacing}};
}

json to_json(const Net& net) {
  return json{{"L", net.L},
              {"alpha", net.alpha},
              {"axis_scales", net.axis_scales},
              {"beta", net.beta},
              {"d", net.d},
              {"epsilon", net.epsilon},
              {"gamma", net.gamma},
              {"group_count", net.groups.size()},
              {"total_entries", net.total_entries()}};
}

json to_json(const ScaleMax& s) {
  return json{{"h", s.h}, {"raw_max", s.raw_max}, {"standardized_max", s.standardized_max}};
}

json scan_report(const std::string& pattern, const ScanResult& r) {
  json scales = json::array();
  for (const auto& s : r.per_scale_max) scales.push_back(to_json(s));
  return json{{"h", r.argmax_h},
              {"negated", r.negated},
              {"pattern", pattern},
              {"per_scale_max", scales},
              {"raw_convolution", r.raw_convolution_at_argmax},
              {"statistic", r.statistic},
              {"t", r.argmax_t}};
}

json to_json(const PamssResult& r) {
  json scores = json::array();
  for (const auto& [name, score] : r.per_pattern_scores)
    scores.push_back(json{{"pattern", name}, {"score", score}});
  json tensors = json::array();
  for (const auto& s : r.per_tensor) tensors.push_back(scan_report(r.best_pattern, s));
  return json{{"E_n", r.E_n},
              {"best_pattern", r.best_pattern},
              {"per_pattern_scores", scores},
              {"per_tensor", tensors}};
}

json to_json(const ThresholdSpec& t) {
  json j{{"delta", t.delta},
         {"dict_size", t.dict_size},
         {"L", t.L},
         {"method", t.method == ThresholdMethod::Theoretical ? "theoretical" : "monte_carlo"},
         {"n", t.n},
         {"value", t.value}};
  if (t.method == ThresholdMethod::Theoretical) j["K"] = t.K;
  if (t.method == ThresholdMethod::MonteCarlo) {
    j["reps"] = t.reps;
    j["seed"] = t.seed;
    j["null_stats"] = t.null_stats;
  }
  return j;
}

ThresholdSpec threshold_from_json(const json& j) {
  ThresholdSpec t;
  const auto method = j.at("method").get<std::string>();
  if (method == "theoretical")
    t.method = ThresholdMethod::Theoretical;
  else if (method == "monte_carlo")
    t.method = ThresholdMethod::MonteCarlo;
  else
    throw ValidationError("unknown threshold method: " + method);
  t.delta = j.at("delta").get<double>();
  t.n = j.at("n").get<int>();
  t.dict_size = j.at("dict_size").get<std::int64_t>();
  t.L = j.at("L").get<double>();
  t.value = j.at("value").get<double>();
  t.K = j.value("K", 0.0);
  t.reps = j.value("reps", std::int64_t{0});
  t.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("null_stats")) t.null_stats = j.at("null_stats").get<std::vector<double>>();
  return t;
}

json to_json(const DetectionReport& r) {
  json j{{"E_n", r.E_n},
         {"reject", r.reject},
         {"result", to_json(r.pamss)},
         {"threshold", to_json(r.threshold)}};
  if (r.p_value_estimate) j["p_value"] = *r.p_value_estimate;
  return j;
}

json to_json(const KCalibration& c) {
  return json{{"K", c.K},
              {"K_ci", c.K_ci},
              {"L", c.L},
              {"deltas", c.deltas},
              {"dict_size", c.dict_size},
              {"n", c.n},
              {"quantiles", c.quantiles},
              {"reps", c.reps},
              {"seed", c.seed}};
}

json to_json(const CoverageReport& c) {
  return json{{"covered", c.covered},
              {"epsilon", c.epsilon},
              {"fraction", c.fraction()},
              {"trials", c.trials},
              {"worst_distance", c.worst_distance},
              {"worst_h", c.worst_h},
              {"worst_t", c.worst_t}};
}

json to_json(const NetCalibration& c) {
  return json{{"C_alpha", c.C_alpha},
              {"C_beta", c.C_beta},
              {"alpha", c.alpha},
              {"beta", c.beta},
              {"epsilon", c.epsilon},
              {"feasible", c.feasible},
              {"net_entries", c.net_entries},
              {"trials", c.trials}};
}

json to_json(const TailReport& r) {
  json points = json::array();
  for (const auto& p : r.points)
    points.push_back(json{{"exceedance", p.exceedance},
                          {"pass", p.pass},
                          {"reference", p.reference},
                          {"se", p.se},
                          {"u", p.u}});
  json blocks = json::array();
  for (const auto& b : r.blocks)
    blocks.push_back(json{{"level", b.level},
                          {"median_raw", b.median_raw},
                          {"median_standardized", b.median_standardized}});
  return json{{"a1", r.a1},
              {"blocks", blocks},
              {"c1", r.c1},
              {"loc", r.loc},
              {"median_max", r.median_max},
              {"points", points},
              {"points_pass", r.points_pass()},
              {"reference_curve", r.reference_curve},
              {"reps", r.reps},
              {"slope", r.slope},
              {"slope_pass", r.slope_pass}};
}

json to_json(const ExperimentSummary& s) {
  return json{{"best_patterns", s.best_patterns},
              {"detection_rate", s.detection_rate},
              {"loc_h_quantiles", s.loc_h_quantiles},
              {"loc_t_quantiles", s.loc_t_quantiles},
              {"n", s.n},
              {"recovery_rate", s.recovery_rate},
              {"rejected", s.rejected},
              {"reps", s.reps},
              {"statistics", s.statistics}};
}

void write_calibration(const KCalibration& c, const Geometry& g, const std::string& path) {
  json j = to_json(c);
  j["geometry_hash"] = geometry_hash(g);
  write_text_file(path, dump_json(j));
}

KCalibration read_calibration(const std::string& path, const Geometry& g) {
  const json j = read_json_file(path);
  if (j.at("geometry_hash").get<std::string>() != geometry_hash(g))
    throw ValidationError("calibration cache was built for a different geometry: " + path);
  KCalibration c;
  c.K = j.at("K").get<double>();
  c.K_ci = j.at("K_ci").get<std::array<double, 2>>();
  c.deltas = j.at("deltas").get<std::vector<double>>();
  c.quantiles = j.at("quantiles").get<std::vector<double>>();
  c.n = j.at("n").get<int>();
  c.dict_size = j.at("dict_size").get<std::int64_t>();
  c.L = j.at("L").get<double>();
  c.reps = j.at("reps").get<std::int64_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

namespace {

std::map<std::string, double> params_from_json(const json& j) {
  std::map<std::string, double> params;
  if (j.contains("params"))
    for (const auto& [key, value] : j.at("params").items()) params[key] = value.get<double>();
  return params;
}

template <typename T>
std::optional<T> opt_field(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  return j.at(key).get<T>();
}

Pattern pattern_from_json(const json& j, int d, const std::string& base_dir) {
  const auto family = j.at("family").get<std::string>();
  const auto kind = pattern_kind_from_string(family);
  const auto name = j.value("name", std::string());
  if (kind != PatternKind::Tabulated) return make_pattern(kind, d, params_from_json(j), name);

  if (name.empty()) throw ValidationError("tabulated pattern needs a name");
  TabulatedData data;
  json table;
  if (j.contains("table")) {
    table = j.at("table");
  } else if (j.contains("file")) {
    std::filesystem::path p(j.at("file").get<std::string>());
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    table = read_json_file(p.string());
  } else {
    throw ValidationError("tabulated pattern needs a table or a file: " + name);
  }
  data.shape = table.at("shape").get<std::vector<std::int64_t>>();
  data.values = table.at("values").get<std::vector<double>>();
  return make_tabulated(name, d, std::move(data), opt_field<double>(j, "gamma1"),
                        opt_field<double>(j, "gamma2"), opt_field<double>(j, "c_a"));
}

}  // namespace

std::vector<Pattern> dictionary_from_json(const json& j, int d, const std::string& base_dir) {
  std::vector<Pattern> dict;
  std::set<std::string> names;
  for (const auto& entry : j.at("patterns")) {
    dict.push_back(pattern_from_json(entry, d, base_dir));
    if (!names.insert(dict.back().name).second)
      throw ValidationError("duplicate pattern name: " + dict.back().name);
  }
  if (dict.empty()) throw ValidationError("dictionary is empty");
  return dict;
}

Net net_from_json(const json& j, double L, int d, const std::vector<Pattern>& dict) {
  const double epsilon = j.at("epsilon").get<double>();
  double gamma;
  if (j.contains("gamma")) {
    gamma = j.at("gamma").get<double>();
  } else {
    if (dict.empty()) throw ValidationError("net spec: gamma needs a dictionary or a value");
    gamma = 1.0;
    for (const auto& f : dict) gamma = std::min(gamma, f.gamma2);
  }
  NetConfig cfg;
  if (j.contains("C_alpha")) cfg.C_alpha = j.at("C_alpha").get<double>();
  if (j.contains("C_beta")) cfg.C_beta = j.at("C_beta").get<double>();
  cfg.alpha_override = opt_field<double>(j, "alpha");
  cfg.beta_override = opt_field<double>(j, "beta");
  if (j.contains("max_entries")) cfg.max_entries = j.at("max_entries").get<std::int64_t>();
  return build_net(L, d, epsilon, gamma, cfg);
}

SimConfig sim_config_from_json(const json& j, const std::string& base_dir) {
  SimConfig cfg;
  cfg.geom = geometry_from_json(j.at("geometry"));
  cfg.n = j.value("n", 1);
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.hypothesis = hypothesis_from_string(j.value("hypothesis", std::string("null")));
  if (j.contains("alt")) {
    const json& a = j.at("alt");
    AltSpec alt;
    alt.pattern = pattern_from_json(a.at("pattern"), cfg.geom.d, base_dir);
    alt.mu = a.at("mu").get<double>();
    alt.scale_law = scale_law_from_string(a.value("scale_law", std::string("log-uniform")));
    alt.h_min = a.value("h_min", 1.0);
    alt.h_max = a.value("h_max", cfg.geom.L / 2.0);
    if (a.contains("h_fixed")) alt.h_fixed = a.at("h_fixed").get<std::vector<double>>();
    cfg.alt = std::move(alt);
  }
  cfg.validate();
  return cfg;
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("invalid JSON in " + path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw RuntimeFault("cannot open for writing: " + path);
  out << content;
  if (!out) throw RuntimeFault("write failed: " + path);
}

}  // namespace mss
