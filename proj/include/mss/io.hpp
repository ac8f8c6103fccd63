#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mss/detect.hpp"
#include "mss/net.hpp"
#include "mss/patterns.hpp"
#include "mss/simulate.hpp"
#include "mss/tensor.hpp"

namespace mss {

using json = nlohmann::json;  // map-backed: object keys serialize sorted

// Binary tensor file: magic "MSST", then little-endian u32 version (1),
// u32 d, u32 R, d x u64 per-axis cell counts, and the row-major payload of
// little-endian 64-bit floats.  Provenance is manifest metadata, not part
// of the file; write/read round-trips geometry and values bit for bit.
void write_tensor(const TensorField& X, const std::string& path);
TensorField read_tensor(const std::string& path);

struct ManifestEntry {
  std::string path;
  Provenance prov;
};

// Dataset manifest: shared geometry, seed lineage (base seed plus the
// per-tensor stream indices), and the tensor files in replicate order.
struct Manifest {
  Geometry geom;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> indices;
  std::vector<ManifestEntry> entries;
};

void write_manifest(const Manifest& m, const std::string& path);
Manifest read_manifest(const std::string& path);

// Reads every referenced tensor (relative paths resolve against the
// manifest's directory), enforces the shared-geometry invariant, and
// attaches the manifest's provenance to each field.
std::vector<TensorField> load_manifest_tensors(const Manifest& m,
                                               const std::string& manifest_path);

// Stable content hash of (d, L, R) for calibration caches.
std::string geometry_hash(const Geometry& g);

json to_json(const Geometry& g);
Geometry geometry_from_json(const json& j);
json to_json(const GroundTruth& t);
GroundTruth ground_truth_from_json(const json& j);
json to_json(const Net& net);  // sizing summary; groups stay as descriptors
json to_json(const NetGroup& g);
json to_json(const ScaleMax& s);
json scan_report(const std::string& pattern, const ScanResult& r);
json to_json(const PamssResult& r);
json to_json(const ThresholdSpec& t);  // monte_carlo specs keep their null stats
ThresholdSpec threshold_from_json(const json& j);
json to_json(const DetectionReport& r);
json to_json(const KCalibration& c);   // calibration cache payload
json to_json(const CoverageReport& c);
json to_json(const NetCalibration& c);
json to_json(const TailReport& r);
json to_json(const ExperimentSummary& s);

// Calibration cache round trip; loading validates the geometry hash.
void write_calibration(const KCalibration& c, const Geometry& g, const std::string& path);
KCalibration read_calibration(const std::string& path, const Geometry& g);

// Dictionary config: {"patterns": [{"family": ..., "name"?, "params"?,
// "file"? | "table"?, "gamma1"?, "gamma2"?, "c_a"?}, ...]}.  Tabulated
// entries take node values from "table" inline or a JSON file reference
// {"shape": [...], "values": [...]} resolved against base_dir.  Names must
// be unique.
std::vector<Pattern> dictionary_from_json(const json& j, int d, const std::string& base_dir);

// Net spec: {"epsilon": ..., "gamma"?, "C_alpha"?, "C_beta"?, "alpha"?,
// "beta"?, "max_entries"?}; missing gamma defaults to the dictionary
// minimum.
Net net_from_json(const json& j, double L, int d, const std::vector<Pattern>& dict);

// Simulation config: {"geometry": {...}, "n"?, "seed"?, "hypothesis"?,
// "alt"?: {"pattern": {...}, "mu", "scale_law"?, "h_min"?, "h_max"?,
// "h_fixed"?}}.
SimConfig sim_config_from_json(const json& j, const std::string& base_dir);

// Sorted-key, 2-space-indented dump with a trailing newline.
std::string dump_json(const json& j);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace mss
