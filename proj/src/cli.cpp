#include "mss/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>

#include "mss/error.hpp"
#include "mss/io.hpp"
#include "mss/rng.hpp"

namespace mss {

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 0;  // 0: fall back to MSS_JOBS, then serial
  bool deterministic = false;
};

void add_common(CLI::App* sub, CommonArgs& c) {
  sub->add_option("--config", c.config, "JSON config file");
  sub->add_option("--out", c.out, "report file (gen: dataset directory)");
  sub->add_option("--seed", c.seed, "override the config seed");
  sub->add_option("--jobs", c.jobs, "worker threads (default: MSS_JOBS, else 1)");
  sub->add_flag("--deterministic", c.deterministic, "omit timestamps from reports");
}

std::string iso_now() {
  const std::time_t tt = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void emit(json j, const CommonArgs& c, std::ostream& out, bool out_is_report = true) {
  if (!c.deterministic) j["timestamp"] = iso_now();
  const std::string text = dump_json(j);
  if (out_is_report && !c.out.empty())
    write_text_file(c.out, text);
  else
    out << text;
}

std::string dir_of(const std::string& path) { return fs::path(path).parent_path().string(); }

json need_config(const CommonArgs& c, const char* cmd) {
  if (c.config.empty())
    throw ValidationError(std::string(cmd) + " needs --config with a JSON file");
  return read_json_file(c.config);
}

std::vector<Pattern> resolve_dict(const json& cfg, const std::string& cfg_dir, int d,
                                  const std::string& dict_path) {
  if (!dict_path.empty())
    return dictionary_from_json(read_json_file(dict_path), d, dir_of(dict_path));
  if (cfg.contains("dictionary")) return dictionary_from_json(cfg.at("dictionary"), d, cfg_dir);
  return built_in_dictionary(d);
}

Net need_net(const json& cfg, double L, int d, const std::vector<Pattern>& dict) {
  if (!cfg.contains("net")) throw ValidationError("config needs a \"net\" spec");
  return net_from_json(cfg.at("net"), L, d, dict);
}

std::uint64_t pick_seed(const json& cfg, const CommonArgs& c) {
  if (c.seed) return *c.seed;
  return cfg.value("seed", std::uint64_t{0});
}

ThresholdSpec resolve_threshold(const json& cfg, const std::string& cfg_dir, const Geometry& geom,
                                const std::vector<Pattern>& dict, const Net& net, int n,
                                const CommonArgs& c) {
  if (!cfg.contains("threshold")) throw ValidationError("config needs a \"threshold\" spec");
  const json& t = cfg.at("threshold");
  if (t.contains("file")) {
    fs::path p(t.at("file").get<std::string>());
    if (p.is_relative()) p = fs::path(cfg_dir) / p;
    return threshold_from_json(read_json_file(p.string()));
  }
  const auto method = t.at("method").get<std::string>();
  const double delta = t.value("delta", defaults::kDefaultDelta);
  if (method == "theoretical")
    return make_theoretical_spec(n, static_cast<std::int64_t>(dict.size()), delta, geom.L,
                                 t.at("K").get<double>());
  if (method == "monte_carlo") {
    const auto reps = t.value("reps", std::int64_t{500});
    const auto seed = t.contains("seed") ? t.at("seed").get<std::uint64_t>() : pick_seed(cfg, c);
    return mc_threshold(geom, dict, net, n, delta, reps, seed, c.jobs);
  }
  throw ValidationError("unknown threshold method: " + method);
}

int run_gen(const CommonArgs& c, std::ostream& out) {
  const json cfg = need_config(c, "gen");
  SimConfig sc = sim_config_from_json(cfg, dir_of(c.config));
  if (c.seed) sc.seed = *c.seed;
  if (c.out.empty()) throw ValidationError("gen needs --out with a dataset directory");
  fs::create_directories(c.out);

  const auto tensors = gen_dataset(sc, 0);
  Manifest m;
  m.geom = sc.geom;
  m.seed = sc.seed;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "tensor_%04zu.msst", i);
    write_tensor(tensors[i], (fs::path(c.out) / name).string());
    m.indices.push_back(static_cast<std::uint64_t>(i));
    m.entries.push_back({name, tensors[i].prov});
  }
  const std::string manifest_path = (fs::path(c.out) / "manifest.json").string();
  write_manifest(m, manifest_path);

  emit(json{{"geometry", to_json(sc.geom)},
            {"hypothesis", to_string(sc.hypothesis)},
            {"manifest", manifest_path},
            {"seed", sc.seed},
            {"tensors", tensors.size()}},
       c, out, /*out_is_report=*/false);
  return 0;
}

int run_net(const CommonArgs& c, std::ostream& out) {
  const json cfg = need_config(c, "net");
  const Geometry geom = geometry_from_json(cfg.at("geometry"));
  const auto dict = resolve_dict(cfg, dir_of(c.config), geom.d, "");
  const Net net = need_net(cfg, geom.L, geom.d, dict);
  json j = to_json(net);
  if (cfg.value("list_groups", false)) {
    json groups = json::array();
    for (const auto& g : net.groups) groups.push_back(to_json(g));
    j["groups"] = groups;
  }
  emit(j, c, out);
  return 0;
}

int run_scan(const CommonArgs& c, const std::string& tensor_path, const std::string& dict_path,
             std::ostream& out) {
  const json cfg = need_config(c, "scan");
  TensorField X = read_tensor(tensor_path);
  const auto dict = resolve_dict(cfg, dir_of(c.config), X.geom.d, dict_path);
  const Net net = need_net(cfg, X.geom.L, X.geom.d, dict);
  ScanOptions opt;
  opt.two_sided = cfg.value("two_sided", false);
  ScanEngine engine(X.geom, net, dict, opt);
  std::vector<TensorField> xs;
  xs.push_back(std::move(X));
  const auto res = engine.run_pamss(xs, c.jobs);
  json j = to_json(res);
  j["net"] = to_json(net);
  emit(j, c, out);
  return 0;
}

int run_detect(const CommonArgs& c, const std::string& manifest_path,
               const std::string& dict_path, bool learn, std::ostream& out) {
  const json cfg = need_config(c, learn ? "learn" : "detect");
  const Manifest m = read_manifest(manifest_path);
  const auto tensors = load_manifest_tensors(m, manifest_path);
  if (tensors.empty()) throw ValidationError("manifest lists no tensors: " + manifest_path);
  const auto dict = resolve_dict(cfg, dir_of(c.config), m.geom.d, dict_path);
  const Net net = need_net(cfg, m.geom.L, m.geom.d, dict);
  ScanOptions opt;
  opt.two_sided = cfg.value("two_sided", false);
  ScanEngine engine(m.geom, net, dict, opt);

  const auto n = static_cast<int>(tensors.size());
  const ThresholdSpec thr =
      resolve_threshold(cfg, dir_of(c.config), m.geom, dict, net, n, c);
  const auto res = engine.run_pamss(tensors, c.jobs);
  const DetectionReport report = decide(res, thr);

  json j = to_json(report);
  // detect keeps the report compact; learn adds the per-tensor placements
  if (!learn) j["result"].erase("per_tensor");
  emit(j, c, out);
  return 0;
}

int run_calibrate(const CommonArgs& c, const std::string& mode, const std::string& dict_path,
                  std::ostream& out) {
  const json cfg = need_config(c, "calibrate");
  const Geometry geom = geometry_from_json(cfg.at("geometry"));
  const auto dict = resolve_dict(cfg, dir_of(c.config), geom.d, dict_path);
  const auto seed = pick_seed(cfg, c);

  if (mode == "mc") {
    const auto spec = mc_threshold(geom, dict, need_net(cfg, geom.L, geom.d, dict),
                                   cfg.value("n", 1), cfg.value("delta", defaults::kDefaultDelta),
                                   cfg.value("reps", std::int64_t{500}), seed, c.jobs);
    emit(to_json(spec), c, out);
    return 0;
  }
  if (mode == "k") {
    const auto cal = calibrate_K(geom, dict, need_net(cfg, geom.L, geom.d, dict),
                                 cfg.value("n", 1), cfg.value("reps", std::int64_t{200}), seed,
                                 c.jobs);
    json j = to_json(cal);
    j["geometry_hash"] = geometry_hash(geom);
    emit(j, c, out);
    return 0;
  }
  if (mode == "net-constants") {
    const auto cal = calibrate_net_constants(dict, geom.L, geom.d, cfg.value("epsilon", 0.25),
                                             cfg.value("trials", 200), seed, geom.R);
    emit(to_json(cal), c, out);
    return 0;
  }
  throw ValidationError("unknown calibrate mode: " + mode);
}

int run_verify_net(const CommonArgs& c, const std::string& dict_path, std::ostream& out) {
  const json cfg = need_config(c, "verify-net");
  const Geometry geom = geometry_from_json(cfg.at("geometry"));
  const auto dict = resolve_dict(cfg, dir_of(c.config), geom.d, dict_path);
  const Net net = need_net(cfg, geom.L, geom.d, dict);
  const int trials = cfg.value("trials", 200);
  const double epsilon = cfg.value("epsilon", net.epsilon);
  const auto seed = pick_seed(cfg, c);

  bool all_covered = true;
  json patterns = json::array();
  for (std::size_t i = 0; i < dict.size(); ++i) {
    const auto rep =
        verify_net(net, dict[i], epsilon, trials, derive_seed(seed, {0x766e6574, i}), geom.R);
    all_covered = all_covered && rep.covered == rep.trials;
    json pj = to_json(rep);
    pj["pattern"] = dict[i].name;
    patterns.push_back(pj);
  }
  emit(json{{"all_covered", all_covered}, {"net", to_json(net)}, {"patterns", patterns}}, c,
       out);
  return 0;
}

int run_diagnose(const CommonArgs& c, std::ostream& out) {
  const json cfg = need_config(c, "diagnose-tails");
  const std::vector<double> default_grid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  json j;

  if (cfg.contains("maxgauss")) {
    const json& mg = cfg.at("maxgauss");
    const auto rep = tail_maxgauss(
        mg.at("N").get<std::int64_t>(), mg.value("reps", std::int64_t{10000}),
        mg.value("u_grid", default_grid),
        mg.contains("seed") ? mg.at("seed").get<std::uint64_t>() : pick_seed(cfg, c), c.jobs);
    j["maxgauss"] = to_json(rep);
  }
  if (cfg.contains("scan")) {
    const json& sc = cfg.at("scan");
    const Geometry geom = geometry_from_json(sc.at("geometry"));
    std::vector<Pattern> dict;
    if (sc.contains("pattern")) {
      dict = dictionary_from_json(json{{"patterns", json::array({sc.at("pattern")})}}, geom.d,
                                  dir_of(c.config));
    } else {
      dict.push_back(make_pattern(PatternKind::QuadraticBump, geom.d, {}));
    }
    const Net net = need_net(sc, geom.L, geom.d, dict);
    const auto rep = tail_scan(
        dict.front(), geom, net, sc.value("reps", std::int64_t{500}),
        sc.value("u_grid", default_grid),
        sc.contains("seed") ? sc.at("seed").get<std::uint64_t>() : pick_seed(cfg, c), c.jobs);
    j["scan"] = to_json(rep);
  }
  if (j.empty())
    throw ValidationError("diagnose-tails config needs a \"maxgauss\" or \"scan\" section");
  emit(j, c, out);
  return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"multiscale scan statistics for smooth patterns in noisy tensors"};
  app.name("mss");
  app.require_subcommand(1);

  CommonArgs gen_c, net_c, scan_c, detect_c, learn_c, cal_c, verify_c, diag_c;
  std::string scan_tensor, scan_dict, detect_manifest, detect_dict, learn_manifest, learn_dict;
  std::string cal_mode = "mc", cal_dict, verify_dict;

  auto* gen = app.add_subcommand("gen", "generate a dataset from a simulation config");
  add_common(gen, gen_c);

  auto* net = app.add_subcommand("net", "build and inspect a scan net");
  add_common(net, net_c);

  auto* scan = app.add_subcommand("scan", "scan one tensor against a dictionary");
  add_common(scan, scan_c);
  scan->add_option("--tensor", scan_tensor, "tensor file")->required();
  scan->add_option("--dict", scan_dict, "dictionary JSON file");

  auto* detect = app.add_subcommand("detect", "test a dataset manifest against a threshold");
  add_common(detect, detect_c);
  detect->add_option("--manifest", detect_manifest, "dataset manifest")->required();
  detect->add_option("--dict", detect_dict, "dictionary JSON file");

  auto* learn = app.add_subcommand("learn", "detect plus best pattern and placements");
  add_common(learn, learn_c);
  learn->add_option("--manifest", learn_manifest, "dataset manifest")->required();
  learn->add_option("--dict", learn_dict, "dictionary JSON file");

  auto* cal = app.add_subcommand("calibrate", "calibrate thresholds, K, or net constants");
  add_common(cal, cal_c);
  cal->add_option("--mode", cal_mode, "mc | k | net-constants");
  cal->add_option("--dict", cal_dict, "dictionary JSON file");

  auto* verify = app.add_subcommand("verify-net", "measure net covering on random draws");
  add_common(verify, verify_c);
  verify->add_option("--dict", verify_dict, "dictionary JSON file");

  auto* diag = app.add_subcommand("diagnose-tails", "empirical tail diagnostics");
  add_common(diag, diag_c);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return run_gen(gen_c, out);
    if (net->parsed()) return run_net(net_c, out);
    if (scan->parsed()) return run_scan(scan_c, scan_tensor, scan_dict, out);
    if (detect->parsed()) return run_detect(detect_c, detect_manifest, detect_dict, false, out);
    if (learn->parsed()) return run_detect(learn_c, learn_manifest, learn_dict, true, out);
    if (cal->parsed()) return run_calibrate(cal_c, cal_mode, cal_dict, out);
    if (verify->parsed()) return run_verify_net(verify_c, verify_dict, out);
    if (diag->parsed()) return run_diagnose(diag_c, out);
    err << "error: no subcommand\n";
    return 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    err << "error: config: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace mss
