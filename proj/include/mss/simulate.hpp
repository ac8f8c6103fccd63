#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mss/detect.hpp"
#include "mss/net.hpp"
#include "mss/patterns.hpp"
#include "mss/scan.hpp"
#include "mss/tensor.hpp"

namespace mss {

enum class Hypothesis { Null, Alt };
enum class ScaleLaw { LogUniform, Fixed };

std::string to_string(Hypothesis h);
Hypothesis hypothesis_from_string(const std::string& s);
std::string to_string(ScaleLaw s);
ScaleLaw scale_law_from_string(const std::string& s);

// Signal half of a generative config: which pattern gets planted, at what
// amplitude, and how its scale and location are drawn.
struct AltSpec {
  Pattern pattern;
  double mu = 0.0;
  ScaleLaw scale_law = ScaleLaw::LogUniform;
  // LogUniform: each h_j ~ exp(U[log h_min, log h_max]), 1 <= h_min <= h_max < L.
  double h_min = 1.0;
  double h_max = 0.0;
  // Fixed: one half-width per axis, each in [1, L).
  std::vector<double> h_fixed;
};

struct SimConfig {
  Geometry geom;
  int n = 1;  // tensors per replicate
  std::uint64_t seed = 0;
  Hypothesis hypothesis = Hypothesis::Null;
  std::optional<AltSpec> alt;  // required when hypothesis is Alt

  void validate() const;
};

// iid standard normal cells.  A pure function of (config.seed, index):
// bit-identical across runs, hypotheses, and execution orders.
TensorField gen_null(const SimConfig& cfg, std::int64_t index);

// Noise from the same stream as gen_null(cfg, index) plus mu times the
// unit-l2 rasterized kernel at a drawn, cell-snapped placement; placement
// draws use an independent stream, so mu = 0 reproduces gen_null bit for
// bit.  Ground truth records the realized (snapped) center and the drawn
// scale.  Throws RuntimeFault if no feasible placement is found in 100
// draws.
TensorField gen_alt(const SimConfig& cfg, std::int64_t index);

// The n tensors of replicate `rep` (indices rep*n .. rep*n + n - 1), drawn
// under the configured hypothesis.
std::vector<TensorField> gen_dataset(const SimConfig& cfg, std::int64_t rep);

struct TailPoint {
  double u = 0.0;
  double exceedance = 0.0;  // empirical fraction strictly above u
  double se = 0.0;          // binomial standard error at the reference value
  double reference = 0.0;
  bool pass = false;  // exceedance <= reference + 3*se
};

// Per-dyadic-scale-block null behavior: block (l_1..l_d) collects the
// scales with h_j in [2^l_j, 2^(l_j+1)).
struct BlockStat {
  std::vector<int> level;
  double median_standardized = 0.0;  // median over reps of the block max of v(c - v)
  double median_raw = 0.0;           // median over reps of the block max of c
};

struct TailReport {
  std::vector<TailPoint> points;  // ascending u
  std::string reference_curve;    // "exp(-u)"
  std::int64_t reps = 0;
  double median_max = 0.0;  // median of the unstandardized per-replicate max

  // Scan-tail extras (zero for tail_maxgauss): z = c1 * S - a1 * loglog(L)
  // fitted by matching the 0.25 and 0.025 upper quantiles to the reference
  // curve, and the least-squares slope of log exceedance against u over the
  // grid points with at least 5 exceedances.
  double c1 = 0.0;
  double a1 = 0.0;
  double loc = 0.0;  // a1 * loglog(L) / c1, the fitted location of S
  double slope = 0.0;
  bool slope_pass = false;  // slope <= -0.85, needs >= 2 usable grid points
  std::vector<BlockStat> blocks;

  bool points_pass() const;
};

// Max of N iid standard normals, standardized as
// 2*sqrt(2 log N) * (max - sqrt(2 log N)), against the exp(-u) tail.
TailReport tail_maxgauss(std::int64_t N, std::int64_t reps, const std::vector<double>& u_grid,
                         std::uint64_t seed, int jobs = 1);

// Null scan statistic of a single pattern: per-replicate full-net maximum
// with an affine standardization fitted from its own quantiles, plus
// per-dyadic-block maxima.  Requires L > e and reps >= 500.
TailReport tail_scan(const Pattern& f, const Geometry& geom, const Net& net, std::int64_t reps,
                     const std::vector<double>& u_grid, std::uint64_t seed, int jobs = 1);

struct ExperimentSummary {
  std::int64_t reps = 0;
  int n = 0;
  double detection_rate = 0.0;
  // Fraction of replicates whose winning pattern names the planted one;
  // zero under the null hypothesis.
  double recovery_rate = 0.0;
  // Pooled per-tensor localization errors against ground truth (signal
  // configs only), in replicate-then-tensor order.
  std::vector<double> loc_t_errors;  // || (t_hat - t) / h ||_2
  std::vector<double> loc_h_errors;  // || log(h_hat / h) ||_2
  std::array<double, 3> loc_t_quantiles = {0.0, 0.0, 0.0};  // 0.5, 0.75, 0.9
  std::array<double, 3> loc_h_quantiles = {0.0, 0.0, 0.0};
  std::vector<double> statistics;  // per-replicate E_n, replicate order
  std::vector<std::uint8_t> rejected;
  std::vector<std::string> best_patterns;
};

// End-to-end harness: per replicate, generate a dataset, run the learning
// scan, and apply the threshold; aggregation is deterministic in replicate
// order for any worker count.
ExperimentSummary run_experiment(const SimConfig& cfg, const std::vector<Pattern>& dict,
                                 const Net& net, const ThresholdSpec& thr, std::int64_t reps,
                                 int jobs = 1);

}  // namespace mss
