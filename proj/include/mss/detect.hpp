#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "mss/defaults.hpp"
#include "mss/scan.hpp"

namespace mss {

enum class ThresholdMethod { Theoretical, MonteCarlo };

struct ThresholdSpec {
  ThresholdMethod method = ThresholdMethod::Theoretical;
  double delta = defaults::kDefaultDelta;  // type-1 level
  double K = 0.0;                          // theoretical method only
  int n = 1;
  std::int64_t dict_size = 1;
  double L = 0.0;
  double value = 0.0;
  // Monte Carlo provenance (reps/seed) and the sorted null statistics,
  // kept so decide() can attach a p-value estimate.
  std::int64_t reps = 0;
  std::uint64_t seed = 0;
  std::vector<double> null_stats;
};

// F_n(delta) * log log L with the regime switch at
// log|F| <= n/K + log delta:
//   regime 1: F_n = sqrt(K log(|F|/delta))
//   regime 2: F_n = (K / sqrt(n)) log(|F|/delta)
// Requires L > e so log log L > 0.
double theoretical_threshold(int n, std::int64_t dict_size, double delta, double L, double K);

ThresholdSpec make_theoretical_spec(int n, std::int64_t dict_size, double delta, double L,
                                    double K);

// Null statistics of E_n: `reps` independent replicates, each n fresh
// standard normal tensors scanned with the engine.  Replicates run in
// parallel with counter-based seeds; results are ordered by replicate.
std::vector<double> simulate_null_statistics(const ScanEngine& engine, int n, std::int64_t reps,
                                             std::uint64_t seed, int jobs = 1);

// Upper empirical quantile with a finite-sample-safe rank: the k-th order
// statistic, k = clamp(ceil((1-delta) * (count+1)), 1, count).
double upper_quantile(const std::vector<double>& sorted_values, double delta);

struct KCalibration {
  double K = 0.0;
  std::array<double, 2> K_ci = {0.0, 0.0};  // bootstrap 95% interval
  std::vector<double> deltas;
  std::vector<double> quantiles;  // empirical null (1-delta) quantiles of E_n
  int n = 1;
  std::int64_t dict_size = 1;
  double L = 0.0;
  std::int64_t reps = 0;
  std::uint64_t seed = 0;
};

// Smallest K whose theoretical threshold exceeds the empirical null
// (1-delta) quantile of E_n for every delta in the config grid.
KCalibration calibrate_K(const Geometry& geom, const std::vector<Pattern>& dict, const Net& net,
                         int n, std::int64_t reps, std::uint64_t seed, int jobs = 1);

ThresholdSpec mc_threshold(const Geometry& geom, const std::vector<Pattern>& dict, const Net& net,
                           int n, double delta, std::int64_t reps, std::uint64_t seed,
                           int jobs = 1);

struct DetectionReport {
  double E_n = 0.0;
  ThresholdSpec threshold;
  bool reject = false;
  std::optional<double> p_value_estimate;  // monte_carlo thresholds only
  PamssResult pamss;
};

DetectionReport decide(const PamssResult& result, const ThresholdSpec& thr);

struct PowerInputs {
  double mu = 0.0;
  std::vector<std::vector<double>> scales;  // per-tensor h^i
  double L = 0.0;
  int n = 0;
  double epsilon = 0.0;

  void validate() const;
};

double M_n(const PowerInputs& pw);  // sum of v_{h^i}
double V_n(const PowerInputs& pw);  // sum of v_{h^i}^2

// P{ E_n - centering < u * spread } <= probability, with
// centering = (mu (1 - eps^2/2) M_n - V_n) / sqrt(n) and
// spread = sqrt(V_n / n).
struct Type2Bound {
  double probability = 0.0;
  double centering = 0.0;
  double spread = 0.0;
};

Type2Bound type2_bound(const PowerInputs& pw, double u);

// mu - sqrt(2) * V_n / M_n; a positive, growing gap predicts asymptotic
// power.
double power_gap(const PowerInputs& pw);

}  // namespace mss
