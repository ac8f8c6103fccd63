#include "mss/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mss/defaults.hpp"
#include "mss/error.hpp"
#include "mss/geometry.hpp"
#include "mss/rng.hpp"

namespace mss {

namespace {

constexpr double kPi = std::numbers::pi;

double simpson(double a, double b, int n, const auto& fn) {
  // n intervals, n even.
  const double h = (b - a) / n;
  double acc = fn(a) + fn(b);
  for (int i = 1; i < n; ++i) acc += fn(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// Unnormalized axis profiles for the separable families.
double profile(PatternKind kind, const std::map<std::string, double>& params, double u) {
  switch (kind) {
    case PatternKind::QuadraticBump:
      return 1.0 - u * u;
    case PatternKind::TruncatedGaussian: {
      const double s = params.at("sigma");
      return std::exp(-u * u / (2.0 * s * s)) - std::exp(-1.0 / (2.0 * s * s));
    }
    case PatternKind::WindowedSinusoid: {
      const double c = params.at("cycles");
      return std::sin(c * kPi * u) * (1.0 - u * u);
    }
    case PatternKind::TensorCosine: {
      const double k = params.at("k");
      return std::cos(k * kPi * u / 2.0);
    }
    case PatternKind::Tabulated:
      break;
  }
  throw ValidationError("profile: not a separable family");
}

double profile_deriv(PatternKind kind, const std::map<std::string, double>& params, double u) {
  switch (kind) {
    case PatternKind::QuadraticBump:
      return -2.0 * u;
    case PatternKind::TruncatedGaussian: {
      const double s = params.at("sigma");
      return -(u / (s * s)) * std::exp(-u * u / (2.0 * s * s));
    }
    case PatternKind::WindowedSinusoid: {
      const double c = params.at("cycles");
      return c * kPi * std::cos(c * kPi * u) * (1.0 - u * u) - 2.0 * u * std::sin(c * kPi * u);
    }
    case PatternKind::TensorCosine: {
      const double k = params.at("k");
      return -(k * kPi / 2.0) * std::sin(k * kPi * u / 2.0);
    }
    case PatternKind::Tabulated:
      break;
  }
  throw ValidationError("profile_deriv: not a separable family");
}

double axis_norm2(PatternKind kind, const std::map<std::string, double>& params) {
  switch (kind) {
    case PatternKind::QuadraticBump:
      return 16.0 / 15.0;
    case PatternKind::TensorCosine:
      return 1.0;  // integer half-cycles integrate exactly
    default:
      return simpson(-1.0, 1.0, 1 << 12, [&](double u) {
        const double v = profile(kind, params, u);
        return v * v;
      });
  }
}

double axis_grad2(PatternKind kind, const std::map<std::string, double>& params) {
  return simpson(-1.0, 1.0, 1 << 12, [&](double u) {
    const double v = profile_deriv(kind, params, u);
    return v * v;
  });
}

void check_params(PatternKind kind, std::map<std::string, double>& params) {
  auto require_only = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : params) {
      (void)value;
      if (std::find_if(allowed.begin(), allowed.end(),
                       [&](const char* a) { return key == a; }) == allowed.end())
        throw ValidationError("make_pattern: unknown parameter '" + key + "'");
    }
  };
  switch (kind) {
    case PatternKind::QuadraticBump:
      require_only({});
      break;
    case PatternKind::TruncatedGaussian: {
      require_only({"sigma"});
      if (!params.count("sigma")) params["sigma"] = 0.25;
      const double s = params["sigma"];
      if (!(s >= 0.05 && s <= 4.0))
        throw ValidationError("make_pattern: sigma must be in [0.05, 4]");
      break;
    }
    case PatternKind::WindowedSinusoid: {
      require_only({"cycles"});
      if (!params.count("cycles")) params["cycles"] = 3.0;
      const double c = params["cycles"];
      if (!(c >= 1.0 && c <= 16.0) || c != std::floor(c))
        throw ValidationError("make_pattern: cycles must be an integer in [1, 16]");
      break;
    }
    case PatternKind::TensorCosine: {
      require_only({"k"});
      if (!params.count("k")) params["k"] = 3.0;
      const double k = params["k"];
      if (!(k >= 1.0 && k <= 31.0) || k != std::floor(k) || std::fmod(k, 2.0) != 1.0)
        throw ValidationError("make_pattern: k must be an odd integer in [1, 31]");
      break;
    }
    case PatternKind::Tabulated:
      throw ValidationError("make_pattern: use make_tabulated for tabulated patterns");
  }
}

}  // namespace

std::string to_string(PatternKind k) {
  switch (k) {
    case PatternKind::QuadraticBump: return "quadratic-bump";
    case PatternKind::TruncatedGaussian: return "truncated-gaussian";
    case PatternKind::WindowedSinusoid: return "windowed-sinusoid";
    case PatternKind::TensorCosine: return "tensor-cosine";
    case PatternKind::Tabulated: return "tabulated";
  }
  throw ValidationError("to_string: bad pattern kind");
}

PatternKind pattern_kind_from_string(const std::string& s) {
  if (s == "quadratic-bump") return PatternKind::QuadraticBump;
  if (s == "truncated-gaussian") return PatternKind::TruncatedGaussian;
  if (s == "windowed-sinusoid") return PatternKind::WindowedSinusoid;
  if (s == "tensor-cosine") return PatternKind::TensorCosine;
  if (s == "tabulated") return PatternKind::Tabulated;
  throw ValidationError("unknown pattern kind '" + s + "'");
}

double Pattern::axis_value(double u) const {
  return axis_scale_ * profile(kind, params, u);
}

double Pattern::axis_deriv(double u) const {
  return axis_scale_ * profile_deriv(kind, params, u);
}

double Pattern::evaluate(const double* u) const {
  for (int j = 0; j < d; ++j)
    if (!(std::abs(u[j]) < 1.0)) return 0.0;
  if (separable()) {
    double prod = 1.0;
    for (int j = 0; j < d; ++j) prod *= axis_value(u[j]);
    return prod;
  }
  // Multilinear interpolation on the node grid.
  const auto& tab = *table_;
  double value = 0.0;
  const int nd = d;
  std::vector<std::int64_t> base(nd);
  std::vector<double> frac(nd);
  for (int j = 0; j < nd; ++j) {
    const double x = (u[j] + 1.0) * 0.5 * static_cast<double>(tab.shape[j] - 1);
    std::int64_t i = static_cast<std::int64_t>(std::floor(x));
    if (i < 0) i = 0;
    if (i > tab.shape[j] - 2) i = tab.shape[j] - 2;
    base[j] = i;
    frac[j] = x - static_cast<double>(i);
  }
  const auto strides = row_major_strides(tab.shape);
  const std::int64_t corners = std::int64_t{1} << nd;
  for (std::int64_t c = 0; c < corners; ++c) {
    double w = 1.0;
    std::int64_t off = 0;
    for (int j = 0; j < nd; ++j) {
      const bool hi = (c >> j) & 1;
      w *= hi ? frac[j] : 1.0 - frac[j];
      off += (base[j] + (hi ? 1 : 0)) * strides[j];
    }
    value += w * tab.values[static_cast<std::size_t>(off)];
  }
  return value;
}

double Pattern::evaluate(const std::vector<double>& u) const {
  if (static_cast<int>(u.size()) != d) throw ValidationError("evaluate: dimension mismatch");
  return evaluate(u.data());
}

Pattern make_pattern(PatternKind kind, int d, const std::map<std::string, double>& params,
                     const std::string& name) {
  if (d < 1 || d > 8) throw ValidationError("make_pattern: d must be in [1, 8]");
  Pattern f;
  f.kind = kind;
  f.d = d;
  f.params = params;
  check_params(kind, f.params);
  f.name = name.empty() ? to_string(kind) : name;
  f.axis_scale_ = 1.0 / std::sqrt(axis_norm2(kind, f.params));

  // Declared stiffness constants.  c_a = ||grad f||_{L2}^2 dominates the
  // shift functional for any shift (Plancherel), padded for quadrature slop;
  // gamma1 pads the measured total variation the same way.
  const double g_axis = axis_grad2(kind, f.params) * f.axis_scale_ * f.axis_scale_;
  f.gamma2 = 1.0;
  f.c_a = 1.02 * static_cast<double>(d) * g_axis;
  const int tv_res = d == 1 ? 2048 : (d == 2 ? 128 : 24);
  f.gamma1 = 1.02 * tv_norm(f, tv_res);
  return f;
}

Pattern make_tabulated(const std::string& name, int d, TabulatedData data,
                       std::optional<double> gamma1, std::optional<double> gamma2,
                       std::optional<double> c_a) {
  if (d < 1 || d > 8) throw ValidationError("make_tabulated: d must be in [1, 8]");
  if (static_cast<int>(data.shape.size()) != d)
    throw ValidationError("make_tabulated: shape rank must equal d");
  std::int64_t total = 1;
  for (std::int64_t n : data.shape) {
    if (n < 2 || n > 100000) throw ValidationError("make_tabulated: axis node count must be in [2, 1e5]");
    total *= n;
    if (total > 100'000'000) throw ValidationError("make_tabulated: table too large");
  }
  if (static_cast<std::int64_t>(data.values.size()) != total)
    throw ValidationError("make_tabulated: value count mismatches shape");
  for (double v : data.values)
    if (!std::isfinite(v)) throw ValidationError("make_tabulated: non-finite value");

  // Trapezoid-weight L2 normalization over the node grid.
  const auto strides = row_major_strides(data.shape);
  double norm2 = 0.0;
  for (std::int64_t idx = 0; idx < total; ++idx) {
    double w = 1.0;
    std::int64_t rem = idx;
    for (int j = 0; j < d; ++j) {
      const std::int64_t i = rem / strides[j];
      rem %= strides[j];
      const double step = 2.0 / static_cast<double>(data.shape[j] - 1);
      w *= (i == 0 || i == data.shape[j] - 1) ? step * 0.5 : step;
    }
    norm2 += w * data.values[static_cast<std::size_t>(idx)] * data.values[static_cast<std::size_t>(idx)];
  }
  if (!(norm2 > 1e-24)) throw ValidationError("make_tabulated: table has (near) zero norm");
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : data.values) v *= inv;

  Pattern f;
  f.kind = PatternKind::Tabulated;
  f.d = d;
  f.name = name.empty() ? "tabulated" : name;
  f.table_ = std::make_shared<const TabulatedData>(std::move(data));
  f.gamma2 = gamma2.value_or(1.0);
  if (!(f.gamma2 > 0.0 && f.gamma2 <= 1.0))
    throw ValidationError("make_tabulated: gamma2 must be in (0, 1]");
  const int tv_res = d == 1 ? 512 : (d == 2 ? 64 : 16);
  f.gamma1 = gamma1 ? *gamma1 : 1.05 * tv_norm(f, tv_res);
  if (c_a) {
    f.c_a = *c_a;
  } else {
    // ||grad f||^2 by the same central-difference quadrature tv_norm uses.
    const int res = tv_res;
    const double delta = 0.5 / res;
    const std::int64_t per = 2 * static_cast<std::int64_t>(res);
    std::int64_t cells = 1;
    for (int j = 0; j < d; ++j) cells *= per;
    double acc = 0.0;
    std::vector<double> u(static_cast<std::size_t>(d));
    std::vector<double> up(u), um(u);
    for (std::int64_t idx = 0; idx < cells; ++idx) {
      std::int64_t rem = idx;
      for (int j = d - 1; j >= 0; --j) {
        u[static_cast<std::size_t>(j)] = (static_cast<double>(rem % per) + 0.5) / res - 1.0;
        rem /= per;
      }
      double g2 = 0.0;
      for (int j = 0; j < d; ++j) {
        up = u;
        um = u;
        up[static_cast<std::size_t>(j)] += delta;
        um[static_cast<std::size_t>(j)] -= delta;
        const double gj = (f.evaluate(up.data()) - f.evaluate(um.data())) / (2.0 * delta);
        g2 += gj * gj;
      }
      acc += g2;
    }
    f.c_a = 1.05 * acc * std::pow(1.0 / res, d);
  }
  if (!(f.c_a > 0.0)) throw ValidationError("make_tabulated: c_a must be positive");
  return f;
}

std::vector<Pattern> built_in_dictionary(int d) {
  std::vector<Pattern> dict;
  dict.push_back(make_pattern(PatternKind::QuadraticBump, d));
  dict.push_back(make_pattern(PatternKind::TruncatedGaussian, d));
  dict.push_back(make_pattern(PatternKind::WindowedSinusoid, d));
  dict.push_back(make_pattern(PatternKind::TensorCosine, d));
  return dict;
}

std::int64_t Kernel::size() const {
  std::int64_t n = 1;
  for (std::int64_t mj : m) n *= mj;
  return n;
}

Kernel rasterize(const Pattern& f, const std::vector<double>& h, int R) {
  if (R < defaults::kMinR) throw ValidationError("rasterize: R must be >= " + std::to_string(defaults::kMinR));
  if (static_cast<int>(h.size()) != f.d) throw ValidationError("rasterize: scale rank must equal d");
  Kernel k;
  k.R = R;
  k.h = h;
  k.m.reserve(h.size());
  std::int64_t total = 1;
  for (double hj : h) {
    if (!(hj > 0.0) || !std::isfinite(hj)) throw ValidationError("rasterize: scales must be positive");
    const std::int64_t mj = static_cast<std::int64_t>(std::ceil(2.0 * hj * R - 1e-9));
    k.m.push_back(std::max<std::int64_t>(mj, 1));
    total *= k.m.back();
    if (total > 200'000'000) throw ValidationError("rasterize: kernel footprint too large");
  }
  k.values.assign(static_cast<std::size_t>(total), 0.0);

  const int d = f.d;
  if (f.separable()) {
    // Per-axis sample vectors, then an outer product.
    std::vector<std::vector<double>> axes(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      auto& a = axes[static_cast<std::size_t>(j)];
      const std::int64_t mj = k.m[static_cast<std::size_t>(j)];
      a.resize(static_cast<std::size_t>(mj));
      for (std::int64_t i = 0; i < mj; ++i) {
        const double u = ((static_cast<double>(i) + 0.5 - 0.5 * static_cast<double>(mj)) / R) / h[static_cast<std::size_t>(j)];
        a[static_cast<std::size_t>(i)] = std::abs(u) < 1.0 ? f.axis_value(u) : 0.0;
      }
    }
    std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
    for (std::int64_t flat = 0; flat < total; ++flat) {
      double prod = 1.0;
      for (int j = 0; j < d; ++j) prod *= axes[static_cast<std::size_t>(j)][static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
      k.values[static_cast<std::size_t>(flat)] = prod;
      for (int j = d - 1; j >= 0; --j) {
        if (++idx[static_cast<std::size_t>(j)] < k.m[static_cast<std::size_t>(j)]) break;
        idx[static_cast<std::size_t>(j)] = 0;
      }
    }
  } else {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
    std::vector<double> u(static_cast<std::size_t>(d));
    for (std::int64_t flat = 0; flat < total; ++flat) {
      for (int j = 0; j < d; ++j) {
        const std::int64_t mj = k.m[static_cast<std::size_t>(j)];
        u[static_cast<std::size_t>(j)] =
            ((static_cast<double>(idx[static_cast<std::size_t>(j)]) + 0.5 - 0.5 * static_cast<double>(mj)) / R) / h[static_cast<std::size_t>(j)];
      }
      k.values[static_cast<std::size_t>(flat)] = f.evaluate(u.data());
      for (int j = d - 1; j >= 0; --j) {
        if (++idx[static_cast<std::size_t>(j)] < k.m[static_cast<std::size_t>(j)]) break;
        idx[static_cast<std::size_t>(j)] = 0;
      }
    }
  }

  double norm2 = 0.0;
  for (double v : k.values) norm2 += v * v;
  if (!(norm2 > 1e-24)) throw ValidationError("rasterize: kernel vanishes on the grid");
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : k.values) v *= inv;
  return k;
}

double tv_norm(const Pattern& f, int R) {
  if (R < 2) throw ValidationError("tv_norm: R must be >= 2");
  const int d = f.d;
  const std::int64_t per = 2 * static_cast<std::int64_t>(R);
  std::int64_t cells = 1;
  for (int j = 0; j < d; ++j) cells *= per;

  double acc = 0.0;
  if (f.separable()) {
    std::vector<double> vals(static_cast<std::size_t>(per)), ders(static_cast<std::size_t>(per));
    for (std::int64_t i = 0; i < per; ++i) {
      const double u = (static_cast<double>(i) + 0.5) / R - 1.0;
      vals[static_cast<std::size_t>(i)] = f.axis_value(u);
      ders[static_cast<std::size_t>(i)] = f.axis_deriv(u);
    }
    std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
    for (std::int64_t flat = 0; flat < cells; ++flat) {
      double g2 = 0.0;
      for (int j = 0; j < d; ++j) {
        double term = 1.0;
        for (int l = 0; l < d; ++l) {
          const auto i = static_cast<std::size_t>(idx[static_cast<std::size_t>(l)]);
          term *= (l == j) ? ders[i] : vals[i];
        }
        g2 += term * term;
      }
      acc += std::sqrt(g2);
      for (int j = d - 1; j >= 0; --j) {
        if (++idx[static_cast<std::size_t>(j)] < per) break;
        idx[static_cast<std::size_t>(j)] = 0;
      }
    }
  } else {
    const double delta = 0.5 / R;
    std::vector<double> u(static_cast<std::size_t>(d)), up(u), um(u);
    std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
    for (std::int64_t flat = 0; flat < cells; ++flat) {
      for (int j = 0; j < d; ++j)
        u[static_cast<std::size_t>(j)] = (static_cast<double>(idx[static_cast<std::size_t>(j)]) + 0.5) / R - 1.0;
      double g2 = 0.0;
      for (int j = 0; j < d; ++j) {
        up = u;
        um = u;
        up[static_cast<std::size_t>(j)] += delta;
        um[static_cast<std::size_t>(j)] -= delta;
        const double gj = (f.evaluate(up.data()) - f.evaluate(um.data())) / (2.0 * delta);
        g2 += gj * gj;
      }
      acc += std::sqrt(g2);
      for (int j = d - 1; j >= 0; --j) {
        if (++idx[static_cast<std::size_t>(j)] < per) break;
        idx[static_cast<std::size_t>(j)] = 0;
      }
    }
  }
  return acc * std::pow(1.0 / R, d);
}

namespace {

// <f, S_delta f> for unit-norm f.  Exact per-axis overlap quadrature for
// separable patterns, midpoint grid quadrature for tabulated ones.
double shift_inner(const Pattern& f, const std::vector<double>& delta) {
  const int d = f.d;
  if (f.separable()) {
    double prod = 1.0;
    for (int j = 0; j < d; ++j) {
      const double dj = delta[static_cast<std::size_t>(j)];
      const double lo = std::max(-1.0, dj - 1.0);
      const double hi = std::min(1.0, dj + 1.0);
      if (hi <= lo) return 0.0;
      prod *= simpson(lo, hi, 1 << 11, [&](double u) {
        return f.axis_value(u) * f.axis_value(u - dj);
      });
    }
    return prod;
  }
  const int res = d == 1 ? 512 : (d == 2 ? 96 : 24);
  const std::int64_t per = 2 * static_cast<std::int64_t>(res);
  std::int64_t cells = 1;
  for (int j = 0; j < d; ++j) cells *= per;
  double acc = 0.0;
  std::vector<double> u(static_cast<std::size_t>(d)), us(u);
  std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
  for (std::int64_t flat = 0; flat < cells; ++flat) {
    for (int j = 0; j < d; ++j) {
      u[static_cast<std::size_t>(j)] = (static_cast<double>(idx[static_cast<std::size_t>(j)]) + 0.5) / res - 1.0;
      us[static_cast<std::size_t>(j)] = u[static_cast<std::size_t>(j)] - delta[static_cast<std::size_t>(j)];
    }
    acc += f.evaluate(u.data()) * f.evaluate(us.data());
    for (int j = d - 1; j >= 0; --j) {
      if (++idx[static_cast<std::size_t>(j)] < per) break;
      idx[static_cast<std::size_t>(j)] = 0;
    }
  }
  return acc * std::pow(1.0 / res, d);
}

}  // namespace

HolderReport holder_check(const Pattern& f, int sample_count, std::uint64_t seed) {
  if (sample_count < 8) throw ValidationError("holder_check: need at least 8 samples");
  Rng rng(derive_seed(seed, {0x484f4c44ull}));
  HolderReport rep;
  rep.gamma_declared = f.gamma2;
  rep.c_declared = f.c_a;
  rep.samples = sample_count;

  std::vector<double> log_r, log_a;
  double c_hat = 0.0;
  bool dominated = true;
  const int d = f.d;
  std::vector<double> delta(static_cast<std::size_t>(d));
  for (int s = 0; s < sample_count; ++s) {
    const double r = std::exp(rng.uniform(std::log(1e-3), std::log(2.0)));
    double n2 = 0.0;
    for (int j = 0; j < d; ++j) {
      delta[static_cast<std::size_t>(j)] = rng.normal();
      n2 += delta[static_cast<std::size_t>(j)] * delta[static_cast<std::size_t>(j)];
    }
    const double inv = r / std::sqrt(std::max(n2, 1e-300));
    for (double& x : delta) x *= inv;

    const double a = std::max(0.0, 2.0 * (1.0 - shift_inner(f, delta)));
    const double ratio = a / std::pow(r, 2.0 * f.gamma2);
    c_hat = std::max(c_hat, ratio);
    if (ratio > f.c_a * (1.0 + 1e-9)) dominated = false;
    if (r <= 0.1 && a > 1e-300) {
      log_r.push_back(std::log(r));
      log_a.push_back(std::log(a));
    }
  }
  rep.c_hat = c_hat;
  rep.dominated = dominated;

  // Least-squares slope of log A against log r; the exponent is half of it.
  if (log_r.size() >= 4) {
    const auto n = static_cast<double>(log_r.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < log_r.size(); ++i) {
      sx += log_r[i];
      sy += log_a[i];
      sxx += log_r[i] * log_r[i];
      sxy += log_r[i] * log_a[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) > 1e-12) rep.gamma_hat = 0.5 * (n * sxy - sx * sy) / denom;
  }
  return rep;
}

}  // namespace mss
