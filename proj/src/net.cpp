#include "mss/net.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "mss/error.hpp"
#include "mss/metric.hpp"
#include "mss/rng.hpp"

namespace mss {

namespace {

std::vector<double> axis_scale_values(double L, double beta) {
  if (!(L > 1.0)) throw ValidationError("net: L must exceed 1");
  if (!(beta > 1.0)) throw ValidationError("net: beta must exceed 1");
  const auto l_max = static_cast<int>(std::floor(std::log(L) / std::log(beta) + 1e-12));
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(l_max) + 1);
  for (int l = 0; l <= l_max; ++l) {
    const double v = std::pow(beta, l);
    if (v < L) values.push_back(v);
  }
  if (values.empty()) throw ValidationError("net: no admissible scales below L");
  return values;
}

std::int64_t lattice_kmax(double L, double h, double spacing) {
  if (!(spacing > 0.0)) throw ValidationError("net: nonpositive lattice spacing");
  if (h > L) throw ValidationError("net: scale exceeds domain");
  return static_cast<std::int64_t>(std::floor((L - h) / spacing + 1e-9));
}

}  // namespace

std::int64_t NetGroup::count() const {
  double approx = 1.0;
  std::int64_t n = 1;
  for (std::int64_t k : kmax) {
    approx *= static_cast<double>(2 * k + 1);
    if (approx > 9e15) throw ValidationError("net: scale group lattice too large");
    n *= 2 * k + 1;
  }
  return n;
}

std::int64_t Net::total_entries() const {
  std::int64_t total = 0;
  for (const auto& g : groups) total += g.count();
  return total;
}

std::int64_t Net::group_index(const std::vector<int>& scale_idx) const {
  if (static_cast<int>(scale_idx.size()) != d) throw ValidationError("group_index: rank mismatch");
  const auto n = static_cast<std::int64_t>(axis_scales.size());
  std::int64_t flat = 0;
  for (int j = 0; j < d; ++j) {
    const int i = scale_idx[static_cast<std::size_t>(j)];
    if (i < 0 || i >= n) throw ValidationError("group_index: scale index out of range");
    flat = flat * n + i;
  }
  return flat;
}

std::pair<double, double> params_for_epsilon(double epsilon, double gamma, int d,
                                             double C_alpha, double C_beta) {
  if (!(epsilon > 0.0 && epsilon <= 2.0)) throw ValidationError("params_for_epsilon: epsilon must be in (0, 2]");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("params_for_epsilon: gamma must be in (0, 1]");
  if (d < 1) throw ValidationError("params_for_epsilon: d must be >= 1");
  if (!(C_alpha > 0.0) || !(C_beta > 0.0)) throw ValidationError("params_for_epsilon: constants must be positive");
  const double alpha = C_alpha * std::pow(epsilon, 1.0 / gamma);
  const double beta = 1.0 + C_beta * (std::pow(1.0 + epsilon, 2.0 / d) - 1.0);
  return {alpha, beta};
}

std::vector<std::vector<double>> build_scales(double L, double beta, int d) {
  if (d < 1 || d > 8) throw ValidationError("build_scales: d must be in [1, 8]");
  const auto axis = axis_scale_values(L, beta);
  const auto n = static_cast<std::int64_t>(axis.size());
  std::int64_t total = 1;
  for (int j = 0; j < d; ++j) total *= n;
  if (total > 10'000'000) throw ValidationError("build_scales: too many scale combinations");

  std::vector<std::vector<double>> scales;
  scales.reserve(static_cast<std::size_t>(total));
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (std::int64_t flat = 0; flat < total; ++flat) {
    std::vector<double> h(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) h[static_cast<std::size_t>(j)] = axis[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
    scales.push_back(std::move(h));
    for (int j = d - 1; j >= 0; --j) {
      if (++idx[static_cast<std::size_t>(j)] < n) break;
      idx[static_cast<std::size_t>(j)] = 0;
    }
  }
  return scales;
}

std::vector<std::vector<double>> build_locations(const std::vector<double>& h, double L,
                                                 double alpha) {
  if (h.empty()) throw ValidationError("build_locations: empty scale vector");
  if (!(alpha > 0.0)) throw ValidationError("build_locations: alpha must be positive");
  const int d = static_cast<int>(h.size());
  std::vector<double> spacing(h.size());
  std::vector<std::int64_t> kmax(h.size());
  std::int64_t total = 1;
  for (int j = 0; j < d; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    if (!(h[sj] > 0.0)) throw ValidationError("build_locations: scales must be positive");
    spacing[sj] = alpha * h[sj];
    kmax[sj] = lattice_kmax(L, h[sj], spacing[sj]);
    total *= 2 * kmax[sj] + 1;
    if (total > 50'000'000) throw ValidationError("build_locations: lattice too large to enumerate");
  }

  std::vector<std::vector<double>> locations;
  locations.reserve(static_cast<std::size_t>(total));
  std::vector<std::int64_t> k(h.size());
  for (int j = 0; j < d; ++j) k[static_cast<std::size_t>(j)] = -kmax[static_cast<std::size_t>(j)];
  for (std::int64_t flat = 0; flat < total; ++flat) {
    std::vector<double> t(h.size());
    for (int j = 0; j < d; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      t[sj] = static_cast<double>(k[sj]) * spacing[sj];
    }
    locations.push_back(std::move(t));
    for (int j = d - 1; j >= 0; --j) {
      const auto sj = static_cast<std::size_t>(j);
      if (++k[sj] <= kmax[sj]) break;
      k[sj] = -kmax[sj];
    }
  }
  return locations;
}

Net build_net(double L, int d, double epsilon, double gamma, const NetConfig& cfg) {
  if (d < 1 || d > 8) throw ValidationError("build_net: d must be in [1, 8]");
  Net net;
  net.d = d;
  net.L = L;
  net.epsilon = epsilon;
  net.gamma = gamma;
  if (cfg.alpha_override && cfg.beta_override) {
    net.alpha = *cfg.alpha_override;
    net.beta = *cfg.beta_override;
  } else if (cfg.alpha_override || cfg.beta_override) {
    const auto [a, b] = params_for_epsilon(epsilon, gamma, d, cfg.C_alpha, cfg.C_beta);
    net.alpha = cfg.alpha_override.value_or(a);
    net.beta = cfg.beta_override.value_or(b);
  } else {
    std::tie(net.alpha, net.beta) = params_for_epsilon(epsilon, gamma, d, cfg.C_alpha, cfg.C_beta);
  }
  if (!(net.alpha > 0.0)) throw ValidationError("build_net: alpha must be positive");

  net.axis_scales = axis_scale_values(L, net.beta);
  const auto n = static_cast<std::int64_t>(net.axis_scales.size());
  std::int64_t n_groups = 1;
  for (int j = 0; j < d; ++j) {
    n_groups *= n;
    if (n_groups > 5'000'000) throw ValidationError("build_net: too many scale groups");
  }

  net.groups.reserve(static_cast<std::size_t>(n_groups));
  std::int64_t total = 0;
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (std::int64_t flat = 0; flat < n_groups; ++flat) {
    NetGroup g;
    g.h.resize(static_cast<std::size_t>(d));
    g.spacing.resize(static_cast<std::size_t>(d));
    g.kmax.resize(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      g.h[sj] = net.axis_scales[static_cast<std::size_t>(idx[sj])];
      g.spacing[sj] = net.alpha * g.h[sj];
      g.kmax[sj] = lattice_kmax(L, g.h[sj], g.spacing[sj]);
    }
    total += g.count();
    if (total > cfg.max_entries)
      throw ValidationError("build_net: net exceeds max entries (alpha=" + std::to_string(net.alpha) +
                            ", beta=" + std::to_string(net.beta) + ")");
    net.groups.push_back(std::move(g));
    for (int j = d - 1; j >= 0; --j) {
      const auto sj = static_cast<std::size_t>(j);
      if (++idx[sj] < n) break;
      idx[sj] = 0;
    }
  }
  return net;
}

Net refine_net(const Net& net, int loc_factor, int scale_split) {
  if (loc_factor < 1 || (loc_factor & (loc_factor - 1)) != 0)
    throw ValidationError("refine_net: loc_factor must be a power of two");
  if (scale_split < 1) throw ValidationError("refine_net: scale_split must be >= 1");
  if (net.axis_scales.empty()) throw ValidationError("refine_net: empty net");

  struct AxisVal {
    double v;
    bool parent;
  };
  std::vector<AxisVal> axis;
  for (double v : net.axis_scales) {
    axis.push_back({v, true});
    for (int r = 1; r < scale_split; ++r) {
      const double w = v * std::pow(net.beta, static_cast<double>(r) / scale_split);
      if (w < net.L) axis.push_back({w, false});
    }
  }
  std::sort(axis.begin(), axis.end(), [](const AxisVal& a, const AxisVal& b) { return a.v < b.v; });
  axis.erase(std::unique(axis.begin(), axis.end(),
                         [](const AxisVal& a, const AxisVal& b) { return a.v == b.v; }),
             axis.end());

  Net r;
  r.d = net.d;
  r.L = net.L;
  r.alpha = net.alpha / loc_factor;
  r.beta = std::pow(net.beta, 1.0 / scale_split);
  r.epsilon = net.epsilon / loc_factor;
  r.gamma = net.gamma;
  r.axis_scales.reserve(axis.size());
  for (const auto& a : axis) r.axis_scales.push_back(a.v);

  const auto n = static_cast<std::int64_t>(axis.size());
  std::int64_t n_groups = 1;
  for (int j = 0; j < r.d; ++j) {
    n_groups *= n;
    if (n_groups > 5'000'000) throw ValidationError("refine_net: too many scale groups");
  }
  r.groups.reserve(static_cast<std::size_t>(n_groups));
  std::vector<int> idx(static_cast<std::size_t>(r.d), 0);
  for (std::int64_t flat = 0; flat < n_groups; ++flat) {
    NetGroup g;
    g.h.resize(static_cast<std::size_t>(r.d));
    g.spacing.resize(static_cast<std::size_t>(r.d));
    g.kmax.resize(static_cast<std::size_t>(r.d));
    for (int j = 0; j < r.d; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      const auto& av = axis[static_cast<std::size_t>(idx[sj])];
      g.h[sj] = av.v;
      // Parent scales must keep the parent lattice as an exact sublattice:
      // divide the parent spacing (same product, same rounding) by the
      // power-of-two factor instead of recomputing alpha * h.
      g.spacing[sj] = av.parent ? (net.alpha * av.v) / loc_factor : r.alpha * av.v;
      g.kmax[sj] = lattice_kmax(r.L, g.h[sj], g.spacing[sj]);
    }
    g.count();  // size guard
    r.groups.push_back(std::move(g));
    for (int j = r.d - 1; j >= 0; --j) {
      const auto sj = static_cast<std::size_t>(j);
      if (++idx[sj] < n) break;
      idx[sj] = 0;
    }
  }
  return r;
}

namespace {

CoverageReport coverage_core(const Net& net, const Pattern& f, double epsilon, int trials,
                             std::uint64_t seed, int R, bool early_exit) {
  if (net.axis_scales.empty() || net.groups.empty()) throw ValidationError("verify_net: empty net");
  if (f.d != net.d) throw ValidationError("verify_net: pattern dimension mismatches net");
  if (trials < 1) throw ValidationError("verify_net: trials must be >= 1");
  if (!(epsilon > 0.0)) throw ValidationError("verify_net: epsilon must be positive");

  CoverageReport rep;
  rep.trials = trials;
  rep.epsilon = epsilon;

  Rng rng(derive_seed(seed, {0x6e657476ull}));
  const int d = net.d;
  const auto n_axis = static_cast<std::int64_t>(net.axis_scales.size());
  std::map<std::int64_t, Kernel> group_kernels;

  std::vector<double> h(static_cast<std::size_t>(d)), t(static_cast<std::size_t>(d));
  for (int trial = 0; trial < trials; ++trial) {
    for (int j = 0; j < d; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      h[sj] = rng.uniform(1.0, net.L);
      t[sj] = rng.uniform(-(net.L - h[sj]), net.L - h[sj]);
    }
    const Kernel sample = rasterize(f, h, R);

    // Candidate axis scale indices: a window around the sample scale.
    std::vector<std::vector<int>> cand(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      auto it = std::lower_bound(net.axis_scales.begin(), net.axis_scales.end(), h[sj]);
      const auto center = static_cast<std::int64_t>(it - net.axis_scales.begin());
      for (std::int64_t i = center - 2; i <= center + 1; ++i)
        if (i >= 0 && i < n_axis) cand[sj].push_back(static_cast<int>(i));
      if (cand[sj].empty()) cand[sj].push_back(static_cast<int>(n_axis) - 1);
    }

    double best = 2.0;
    std::vector<int> scale_idx(static_cast<std::size_t>(d), 0);
    std::vector<std::size_t> pos(static_cast<std::size_t>(d), 0);
    for (;;) {
      for (int j = 0; j < d; ++j)
        scale_idx[static_cast<std::size_t>(j)] = cand[static_cast<std::size_t>(j)][pos[static_cast<std::size_t>(j)]];
      const std::int64_t gi = net.group_index(scale_idx);
      const NetGroup& g = net.groups[static_cast<std::size_t>(gi)];
      auto kit = group_kernels.find(gi);
      if (kit == group_kernels.end()) kit = group_kernels.emplace(gi, rasterize(f, g.h, R)).first;

      // Nearest lattice point and its neighbors along each axis.
      std::vector<std::int64_t> base(static_cast<std::size_t>(d));
      for (int j = 0; j < d; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        std::int64_t k = std::llround(t[sj] / g.spacing[sj]);
        k = std::clamp<std::int64_t>(k, -g.kmax[sj], g.kmax[sj]);
        base[sj] = k;
      }
      std::vector<double> tc(static_cast<std::size_t>(d));
      const std::int64_t combos = [&] {
        std::int64_t c = 1;
        for (int j = 0; j < d; ++j) (void)j, c *= 3;
        return c;
      }();
      for (std::int64_t c = 0; c < combos; ++c) {
        std::int64_t rem = c;
        bool valid = true;
        for (int j = 0; j < d; ++j) {
          const auto sj = static_cast<std::size_t>(j);
          const std::int64_t k = base[sj] + (rem % 3) - 1;
          rem /= 3;
          if (k < -g.kmax[sj] || k > g.kmax[sj]) {
            valid = false;
            break;
          }
          tc[sj] = static_cast<double>(k) * g.spacing[sj];
        }
        if (!valid) continue;
        const double ip = kernel_inner(sample, t, kit->second, tc);
        const double dist = std::sqrt(std::max(0.0, 2.0 - 2.0 * ip));
        best = std::min(best, dist);
      }

      int j = d - 1;
      for (; j >= 0; --j) {
        const auto sj = static_cast<std::size_t>(j);
        if (++pos[sj] < cand[sj].size()) break;
        pos[sj] = 0;
      }
      if (j < 0) break;
    }

    if (best <= epsilon + 1e-9) {
      ++rep.covered;
    } else if (early_exit) {
      rep.worst_distance = best;
      rep.worst_t = t;
      rep.worst_h = h;
      return rep;
    }
    if (best > rep.worst_distance) {
      rep.worst_distance = best;
      rep.worst_t = t;
      rep.worst_h = h;
    }
  }
  return rep;
}

}  // namespace

CoverageReport verify_net(const Net& net, const Pattern& f, double epsilon, int trials,
                          std::uint64_t seed, int R) {
  return coverage_core(net, f, epsilon, trials, seed, R, false);
}

NetCalibration calibrate_net_constants(const std::vector<Pattern>& dict, double L, int d,
                                       double epsilon, int trials, std::uint64_t seed, int R) {
  if (dict.empty()) throw ValidationError("calibrate_net_constants: empty dictionary");
  const std::vector<double> alpha_grid = {0.40, 0.34, 0.29, 0.25, 0.21, 0.18, 0.15, 0.13,
                                          0.11, 0.095, 0.08, 0.07, 0.06, 0.05, 0.042, 0.035};
  const std::vector<double> beta_grid = {0.40, 0.32, 0.25, 0.20, 0.16, 0.125, 0.10, 0.08,
                                         0.063, 0.05, 0.04, 0.032, 0.025, 0.02};

  NetCalibration best;
  best.trials = trials;
  best.epsilon = epsilon;
  double gamma = 1.0;
  for (const auto& f : dict) gamma = std::min(gamma, f.gamma2);

  for (double ca : alpha_grid) {
    for (double cb : beta_grid) {
      Net net;
      try {
        NetConfig cfg;
        cfg.C_alpha = ca;
        cfg.C_beta = cb;
        net = build_net(L, d, epsilon, gamma, cfg);
      } catch (const ValidationError&) {
        continue;
      }
      const std::int64_t entries = net.total_entries();
      if (best.feasible && entries >= best.net_entries) continue;

      bool all_covered = true;
      for (std::size_t p = 0; p < dict.size(); ++p) {
        const auto rep = coverage_core(net, dict[p], epsilon, trials,
                                       derive_seed(seed, {0x63616cull, p}), R, true);
        if (rep.covered != rep.trials) {
          all_covered = false;
          break;
        }
      }
      if (!all_covered) continue;
      best.feasible = true;
      best.C_alpha = ca;
      best.C_beta = cb;
      best.alpha = net.alpha;
      best.beta = net.beta;
      best.net_entries = entries;
    }
  }
  return best;
}

}  // namespace mss
