#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mss/defaults.hpp"
#include "mss/patterns.hpp"

namespace mss {

struct NetConfig {
  double C_alpha = defaults::kCAlpha;
  double C_beta = defaults::kCBeta;
  std::optional<double> alpha_override;
  std::optional<double> beta_override;
  std::int64_t max_entries = defaults::kMaxNetEntries;
};

// One scale vector with its location lattice: locations are
// t_j = k_j * spacing_j for integer k_j in [-kmax_j, kmax_j], which is
// exactly (spacing_j * Z) intersected with the admissible box |t_j| <=
// L - h_j.  Lattices are stored as descriptors, never enumerated.
struct NetGroup {
  std::vector<double> h;
  std::vector<double> spacing;
  std::vector<std::int64_t> kmax;

  std::int64_t count() const;
};

struct Net {
  int d = 1;
  double L = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double epsilon = 0.0;
  double gamma = 1.0;
  // Admissible per-axis scale values, ascending; identical for every axis.
  std::vector<double> axis_scales;
  // All d-fold scale combinations in odometer order (axis 0 slowest).
  std::vector<NetGroup> groups;

  std::int64_t total_entries() const;
  // groups index for a combination of axis_scales indices.
  std::int64_t group_index(const std::vector<int>& scale_idx) const;
};

// Spacing and scale ratio for a target covering radius: alpha =
// C_alpha * eps^(1/gamma), beta = 1 + C_beta * ((1+eps)^(2/d) - 1).
std::pair<double, double> params_for_epsilon(double epsilon, double gamma, int d,
                                             double C_alpha = defaults::kCAlpha,
                                             double C_beta = defaults::kCBeta);

// Scale vectors {beta^l} up to L, dropping any vector with a component >= L.
std::vector<std::vector<double>> build_scales(double L, double beta, int d);

// Explicit location lattice for one scale vector (for inspection and tests;
// the scanner works from NetGroup descriptors instead).
std::vector<std::vector<double>> build_locations(const std::vector<double>& h, double L,
                                                 double alpha);

Net build_net(double L, int d, double epsilon, double gamma, const NetConfig& cfg = {});

// Superset refinement: location spacing divided by loc_factor (a power of
// two, so parent lattice points reproduce bit for bit) and scale_split - 1
// intermediate scales inserted between consecutive parent scales.  Every
// parent entry is an entry of the result.
Net refine_net(const Net& net, int loc_factor, int scale_split);

struct CoverageReport {
  int trials = 0;
  int covered = 0;
  double epsilon = 0.0;
  double worst_distance = 0.0;
  std::vector<double> worst_t, worst_h;

  double fraction() const { return trials ? static_cast<double>(covered) / trials : 0.0; }
};

// Samples (t, h) uniformly from the continuous parameter set (h_j in [1, L),
// t_j in [-(L-h_j), L-h_j]) and measures the kernel-metric distance to the
// nearest net entry among neighboring scales and lattice points.
CoverageReport verify_net(const Net& net, const Pattern& f, double epsilon, int trials,
                          std::uint64_t seed, int R = defaults::kDefaultR);

struct NetCalibration {
  double C_alpha = 0.0;
  double C_beta = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  std::int64_t net_entries = 0;
  bool feasible = false;
  int trials = 0;
  double epsilon = 0.0;
};

// Grid search for the largest (cheapest net) sizing constants whose net
// covers every sampled parameter point for every dictionary pattern.
NetCalibration calibrate_net_constants(const std::vector<Pattern>& dict, double L, int d,
                                       double epsilon, int trials, std::uint64_t seed,
                                       int R = defaults::kDefaultR);

}  // namespace mss
