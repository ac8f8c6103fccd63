#include "mss/metric.hpp"

#include <algorithm>
#include <cmath>

#include "mss/error.hpp"
#include "mss/geometry.hpp"

namespace mss {

void ParamPair::validate(int d) const {
  const auto sd = static_cast<std::size_t>(d);
  if (t_a.size() != sd || h_a.size() != sd || t_b.size() != sd || h_b.size() != sd)
    throw ValidationError("param pair: rank mismatch");
  for (int j = 0; j < d; ++j)
    if (!(h_a[static_cast<std::size_t>(j)] > 0.0) || !(h_b[static_cast<std::size_t>(j)] > 0.0))
      throw ValidationError("param pair: scales must be positive");
}

double kernel_inner(const Kernel& a, const std::vector<double>& ta,
                    const Kernel& b, const std::vector<double>& tb) {
  if (a.R != b.R) throw ValidationError("kernel_inner: kernels must share R");
  const int d = static_cast<int>(a.m.size());
  if (static_cast<int>(b.m.size()) != d || static_cast<int>(ta.size()) != d ||
      static_cast<int>(tb.size()) != d)
    throw ValidationError("kernel_inner: rank mismatch");

  // Relative placement on the (unbounded) cell lattice; only the start-cell
  // difference matters.  Overlap along axis j: cells [0, m_a) of a against
  // [off, off + m_b) of b.
  std::vector<std::int64_t> off(static_cast<std::size_t>(d));
  std::vector<std::int64_t> lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    off[sj] = rel_start_cell(tb[sj], b.R, b.m[sj]) - rel_start_cell(ta[sj], a.R, a.m[sj]);
    lo[sj] = std::max<std::int64_t>(0, off[sj]);
    hi[sj] = std::min<std::int64_t>(a.m[sj], off[sj] + b.m[sj]);
    if (hi[sj] <= lo[sj]) return 0.0;
  }

  const auto stride_a = row_major_strides(a.m);
  const auto stride_b = row_major_strides(b.m);
  double acc = 0.0;
  std::vector<std::int64_t> idx(lo);
  for (;;) {
    // Innermost axis handled as a contiguous run.
    std::int64_t base_a = 0, base_b = 0;
    for (int j = 0; j < d - 1; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      base_a += idx[sj] * stride_a[sj];
      base_b += (idx[sj] - off[sj]) * stride_b[sj];
    }
    const auto last = static_cast<std::size_t>(d - 1);
    const double* pa = a.values.data() + base_a + lo[last];
    const double* pb = b.values.data() + base_b + (lo[last] - off[last]);
    const std::int64_t run = hi[last] - lo[last];
    for (std::int64_t i = 0; i < run; ++i) acc += pa[i] * pb[i];

    int j = d - 2;
    for (; j >= 0; --j) {
      const auto sj = static_cast<std::size_t>(j);
      if (++idx[sj] < hi[sj]) break;
      idx[sj] = lo[sj];
    }
    if (j < 0) break;
  }
  return acc;
}

double nu(const Pattern& f, const ParamPair& pair, int R) {
  pair.validate(f.d);
  const Kernel a = rasterize(f, pair.h_a, R);
  const Kernel b = rasterize(f, pair.h_b, R);
  const double ip = kernel_inner(a, pair.t_a, b, pair.t_b);
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * ip));
}

double nu_bound_tvc(double gamma1, const ParamPair& pair, double C) {
  if (!(gamma1 > 0.0)) throw ValidationError("nu_bound_tvc: gamma1 must be positive");
  const int d = static_cast<int>(pair.t_a.size());
  pair.validate(d);
  double loc = 0.0, scale = 0.0;
  double prod_a = 1.0, prod_b = 1.0;
  for (int j = 0; j < d; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    const double rt = (pair.t_a[sj] - pair.t_b[sj]) / pair.h_a[sj];
    const double rh = (pair.h_a[sj] - pair.h_b[sj]) / pair.h_a[sj];
    loc += rt * rt;
    scale += rh * rh;
    prod_a *= pair.h_a[sj];
    prod_b *= pair.h_b[sj];
  }
  const double vol = std::sqrt(prod_b / prod_a) - 1.0;
  return C * gamma1 * (loc + scale + vol * vol);
}

double nu_bound_ahc(double gamma2, const ParamPair& pair, double C) {
  if (!(gamma2 > 0.0 && gamma2 <= 1.0)) throw ValidationError("nu_bound_ahc: gamma2 must be in (0, 1]");
  const int d = static_cast<int>(pair.t_a.size());
  pair.validate(d);
  double acc = 0.0;
  for (int j = 0; j < d; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    const double rt = std::abs((pair.t_a[sj] - pair.t_b[sj]) / pair.h_a[sj]);
    const double rh = std::abs((pair.h_a[sj] - pair.h_b[sj]) /
                               std::sqrt(pair.h_a[sj] * pair.h_b[sj]));
    acc += std::pow(rt, 2.0 * gamma2) + rh * rh + std::pow(rh, 2.0 * gamma2);
  }
  return C * acc;
}

}  // namespace mss
