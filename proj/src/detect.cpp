#include "mss/detect.hpp"

#include <algorithm>
#include <cmath>

#include "mss/error.hpp"
#include "mss/parallel.hpp"
#include "mss/rng.hpp"
#include "mss/simulate.hpp"

namespace mss {

namespace {

double loglog(double L) {
  if (!(L > std::exp(1.0))) throw ValidationError("threshold: L must exceed e");
  return std::log(std::log(L));
}

double log_ratio(std::int64_t dict_size, double delta) {
  if (dict_size < 1) throw ValidationError("threshold: dict_size must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("threshold: delta must be in (0, 1)");
  return std::log(static_cast<double>(dict_size)) - std::log(delta);
}

double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::sqrt(2.0)); }

}  // namespace

double theoretical_threshold(int n, std::int64_t dict_size, double delta, double L, double K) {
  if (n < 1) throw ValidationError("theoretical_threshold: n must be >= 1");
  if (!(K > 0.0)) throw ValidationError("theoretical_threshold: K must be positive");
  const double lam = loglog(L);
  const double c = log_ratio(dict_size, delta);
  const double log_dict = std::log(static_cast<double>(dict_size));
  double F;
  if (log_dict <= static_cast<double>(n) / K + std::log(delta)) {
    F = std::sqrt(K * c);
  } else {
    F = K / std::sqrt(static_cast<double>(n)) * c;
  }
  return F * lam;
}

ThresholdSpec make_theoretical_spec(int n, std::int64_t dict_size, double delta, double L,
                                    double K) {
  ThresholdSpec spec;
  spec.method = ThresholdMethod::Theoretical;
  spec.delta = delta;
  spec.K = K;
  spec.n = n;
  spec.dict_size = dict_size;
  spec.L = L;
  spec.value = theoretical_threshold(n, dict_size, delta, L, K);
  return spec;
}

std::vector<double> simulate_null_statistics(const ScanEngine& engine, int n, std::int64_t reps,
                                             std::uint64_t seed, int jobs) {
  if (n < 1) throw ValidationError("simulate_null_statistics: n must be >= 1");
  if (reps < 1) throw ValidationError("simulate_null_statistics: reps must be >= 1");
  jobs = resolve_jobs(jobs);

  SimConfig cfg;
  cfg.geom = engine.geometry();
  cfg.n = n;
  cfg.seed = seed;

  std::vector<double> stats(static_cast<std::size_t>(reps));
  parallel_for(jobs, reps, [&](std::int64_t r) {
    stats[static_cast<std::size_t>(r)] = engine.run_pamss(gen_dataset(cfg, r), 1).E_n;
  });
  return stats;
}

double upper_quantile(const std::vector<double>& sorted_values, double delta) {
  if (sorted_values.empty()) throw ValidationError("upper_quantile: empty sample");
  if (!(delta > 0.0 && delta <= 1.0)) throw ValidationError("upper_quantile: delta must be in (0, 1]");
  const auto count = static_cast<std::int64_t>(sorted_values.size());
  auto k = static_cast<std::int64_t>(std::ceil((1.0 - delta) * static_cast<double>(count + 1)));
  k = std::clamp<std::int64_t>(k, 1, count);
  return sorted_values[static_cast<std::size_t>(k - 1)];
}

namespace {

// Smallest K whose threshold matches the target quantile for one delta.
// Inverts both regimes of F_n; the regime conditions are consistent with
// the inversion (target <= sqrt(n) iff regime 1 applies at the solution).
double invert_K(double q, double lam, double c, int n) {
  if (!(q > 0.0)) return defaults::kMinK;
  const double target = q / lam;
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  double K;
  if (target <= sqrt_n) {
    K = target * target / c;
  } else {
    K = target * sqrt_n / c;
  }
  return std::max(K, defaults::kMinK);
}

double k_for_sample(std::vector<double>& sorted_sample, double lam, int n,
                    std::int64_t dict_size, std::vector<double>* quantiles_out) {
  double K = defaults::kMinK;
  for (double delta : defaults::kKDeltaGrid) {
    const double q = upper_quantile(sorted_sample, delta);
    if (quantiles_out) quantiles_out->push_back(q);
    K = std::max(K, invert_K(q, lam, log_ratio(dict_size, delta), n));
  }
  // "Exceeds" is strict; nudge above the binding equality.
  return K * (1.0 + 1e-9);
}

}  // namespace

KCalibration calibrate_K(const Geometry& geom, const std::vector<Pattern>& dict, const Net& net,
                         int n, std::int64_t reps, std::uint64_t seed, int jobs) {
  if (reps < 100) throw ValidationError("calibrate_K: reps must be >= 100");
  ScanEngine engine(geom, net, dict);
  auto stats = simulate_null_statistics(engine, n, reps, seed, jobs);
  std::sort(stats.begin(), stats.end());

  KCalibration cal;
  cal.n = n;
  cal.dict_size = static_cast<std::int64_t>(dict.size());
  cal.L = geom.L;
  cal.reps = reps;
  cal.seed = seed;
  cal.deltas.assign(defaults::kKDeltaGrid.begin(), defaults::kKDeltaGrid.end());

  const double lam = loglog(geom.L);
  cal.K = k_for_sample(stats, lam, n, cal.dict_size, &cal.quantiles);

  // Percentile bootstrap over the replicate statistics.
  const int B = 200;
  std::vector<double> boot(B);
  std::vector<double> resample(stats.size());
  for (int b = 0; b < B; ++b) {
    Rng rng(derive_seed(seed, {0x626f6f74ull, static_cast<std::uint64_t>(b)}));
    for (auto& v : resample)
      v = stats[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(stats.size())))];
    std::sort(resample.begin(), resample.end());
    boot[static_cast<std::size_t>(b)] = k_for_sample(resample, lam, n, cal.dict_size, nullptr);
  }
  std::sort(boot.begin(), boot.end());
  cal.K_ci = {upper_quantile(boot, 0.975), upper_quantile(boot, 0.025)};
  return cal;
}

ThresholdSpec mc_threshold(const Geometry& geom, const std::vector<Pattern>& dict, const Net& net,
                           int n, double delta, std::int64_t reps, std::uint64_t seed, int jobs) {
  if (!(delta > 0.0 && delta <= 1.0)) throw ValidationError("mc_threshold: delta must be in (0, 1]");
  if (static_cast<double>(reps) * delta < 5.0)
    throw ValidationError("mc_threshold: insufficient reps for the requested delta");
  ScanEngine engine(geom, net, dict);
  auto stats = simulate_null_statistics(engine, n, reps, seed, jobs);
  std::sort(stats.begin(), stats.end());

  ThresholdSpec spec;
  spec.method = ThresholdMethod::MonteCarlo;
  spec.delta = delta;
  spec.n = n;
  spec.dict_size = static_cast<std::int64_t>(dict.size());
  spec.L = geom.L;
  spec.reps = reps;
  spec.seed = seed;
  spec.value = upper_quantile(stats, delta);
  spec.null_stats = std::move(stats);
  return spec;
}

DetectionReport decide(const PamssResult& result, const ThresholdSpec& thr) {
  DetectionReport rep;
  rep.E_n = result.E_n;
  rep.threshold = thr;
  rep.reject = result.E_n > thr.value;
  if (thr.method == ThresholdMethod::MonteCarlo && !thr.null_stats.empty()) {
    const auto ge = thr.null_stats.end() -
                    std::lower_bound(thr.null_stats.begin(), thr.null_stats.end(), result.E_n);
    rep.p_value_estimate = static_cast<double>(ge) / static_cast<double>(thr.null_stats.size());
  }
  rep.pamss = result;
  return rep;
}

void PowerInputs::validate() const {
  if (n < 1) throw ValidationError("power inputs: n must be >= 1");
  if (static_cast<int>(scales.size()) != n)
    throw ValidationError("power inputs: scales count must equal n");
  if (!(L > 1.0)) throw ValidationError("power inputs: L must exceed 1");
  if (!(epsilon >= 0.0 && epsilon <= 2.0))
    throw ValidationError("power inputs: epsilon must be in [0, 2]");
}

double M_n(const PowerInputs& pw) {
  pw.validate();
  double acc = 0.0;
  for (const auto& h : pw.scales) acc += v_h(h, pw.L);
  return acc;
}

double V_n(const PowerInputs& pw) {
  pw.validate();
  double acc = 0.0;
  for (const auto& h : pw.scales) {
    const double v = v_h(h, pw.L);
    acc += v * v;
  }
  return acc;
}

Type2Bound type2_bound(const PowerInputs& pw, double u) {
  pw.validate();
  Type2Bound b;
  const double sqrt_n = std::sqrt(static_cast<double>(pw.n));
  b.centering = (pw.mu * (1.0 - pw.epsilon * pw.epsilon / 2.0) * M_n(pw) - V_n(pw)) / sqrt_n;
  b.spread = std::sqrt(V_n(pw) / static_cast<double>(pw.n));
  b.probability = normal_cdf(u);
  return b;
}

double power_gap(const PowerInputs& pw) {
  const double m = M_n(pw);
  if (!(m > 0.0)) throw ValidationError("power_gap: M_n must be positive");
  return pw.mu - std::sqrt(2.0) * V_n(pw) / m;
}

}  // namespace mss
