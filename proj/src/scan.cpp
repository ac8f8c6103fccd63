#include "mss/scan.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "mss/error.hpp"
#include "mss/parallel.hpp"

namespace mss {

double v_h(const std::vector<double>& h, double L) {
  if (h.empty()) throw ValidationError("v_h: empty scale vector");
  if (!(L > 0.0)) throw ValidationError("v_h: L must be positive");
  double sum = 0.0;
  for (double hj : h) {
    if (!(hj > 0.0)) throw ValidationError("v_h: scales must be positive");
    if (hj > L * (1.0 + 1e-12)) throw ValidationError("v_h: scale exceeds L");
    sum += std::max(0.0, std::log(L / hj));
  }
  return std::sqrt(2.0 * sum);
}

namespace {

// Inner product of the kernel with the window of x starting at `start`.
double window_inner(const std::vector<double>& x, const std::vector<std::int64_t>& xstrides,
                    const Kernel& k, const std::int64_t* start) {
  const int d = static_cast<int>(k.m.size());
  const std::int64_t m_last = k.m[static_cast<std::size_t>(d - 1)];
  const std::int64_t rows = k.size() / m_last;
  double acc = 0.0;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(d > 1 ? d - 1 : 0), 0);
  for (std::int64_t row = 0; row < rows; ++row) {
    std::int64_t xbase = start[d - 1];
    for (int j = 0; j < d - 1; ++j)
      xbase += (start[j] + idx[static_cast<std::size_t>(j)]) * xstrides[static_cast<std::size_t>(j)];
    const double* px = x.data() + xbase;
    const double* pk = k.values.data() + row * m_last;
    double run = 0.0;
    for (std::int64_t i = 0; i < m_last; ++i) run += pk[i] * px[i];
    acc += run;
    for (int j = d - 2; j >= 0; --j) {
      const auto sj = static_cast<std::size_t>(j);
      if (++idx[sj] < k.m[sj]) break;
      idx[sj] = 0;
    }
  }
  return acc;
}

std::vector<std::int64_t> valid_shape(const std::vector<std::int64_t>& cells,
                                      const std::vector<std::int64_t>& m) {
  std::vector<std::int64_t> out(cells.size());
  for (std::size_t j = 0; j < cells.size(); ++j) {
    out[j] = cells[j] - m[j] + 1;
    if (out[j] < 1) throw ValidationError("convolve_at_scale: kernel larger than tensor");
  }
  return out;
}

}  // namespace

Convolution convolve_at_scale(const TensorField& X, const Kernel& k, ConvMethod method) {
  X.validate();
  const int d = X.geom.d;
  if (static_cast<int>(k.m.size()) != d) throw ValidationError("convolve_at_scale: rank mismatch");
  if (k.R != X.geom.R) throw ValidationError("convolve_at_scale: kernel resolution mismatches tensor");
  const auto cells = X.geom.shape();

  Convolution out;
  out.shape = valid_shape(cells, k.m);
  std::int64_t out_total = 1;
  for (std::int64_t n : out.shape) out_total *= n;
  out.values.resize(static_cast<std::size_t>(out_total));

  if (method == ConvMethod::Auto) {
    const std::int64_t widest = *std::max_element(k.m.begin(), k.m.end());
    method = widest > defaults::kFftCrossover ? ConvMethod::Fft : ConvMethod::Direct;
  }

  if (method == ConvMethod::Direct) {
    const auto xstr = row_major_strides(cells);
    std::vector<std::int64_t> s(static_cast<std::size_t>(d), 0);
    for (std::int64_t flat = 0; flat < out_total; ++flat) {
      out.values[static_cast<std::size_t>(flat)] = window_inner(X.values, xstr, k, s.data());
      for (int j = d - 1; j >= 0; --j) {
        const auto sj = static_cast<std::size_t>(j);
        if (++s[sj] < out.shape[sj]) break;
        s[sj] = 0;
      }
    }
    return out;
  }

  // FFT path: circular correlation IFFT(conj(K) * X) / N; the valid region
  // never touches the wrapped part, so it equals the direct answer there.
  const auto fft = RealFft::plan_for(cells);
  const std::int64_t total = fft->total();
  const std::int64_t cc = fft->complex_count();

  std::vector<double> pad(static_cast<std::size_t>(total), 0.0);
  const auto xstr = row_major_strides(cells);
  {
    const std::int64_t m_last = k.m[static_cast<std::size_t>(d - 1)];
    const std::int64_t rows = k.size() / m_last;
    std::vector<std::int64_t> idx(static_cast<std::size_t>(d > 1 ? d - 1 : 0), 0);
    for (std::int64_t row = 0; row < rows; ++row) {
      std::int64_t base = 0;
      for (int j = 0; j < d - 1; ++j) base += idx[static_cast<std::size_t>(j)] * xstr[static_cast<std::size_t>(j)];
      std::memcpy(pad.data() + base, k.values.data() + row * m_last,
                  sizeof(double) * static_cast<std::size_t>(m_last));
      for (int j = d - 2; j >= 0; --j) {
        const auto sj = static_cast<std::size_t>(j);
        if (++idx[sj] < k.m[sj]) break;
        idx[sj] = 0;
      }
    }
  }

  std::vector<std::complex<double>> khat(static_cast<std::size_t>(cc));
  std::vector<std::complex<double>> xhat(static_cast<std::size_t>(cc));
  fft->forward(pad.data(), khat.data());
  fft->forward(X.values.data(), xhat.data());
  for (std::int64_t w = 0; w < cc; ++w)
    khat[static_cast<std::size_t>(w)] =
        std::conj(khat[static_cast<std::size_t>(w)]) * xhat[static_cast<std::size_t>(w)] / static_cast<double>(total);
  std::vector<double> full(static_cast<std::size_t>(total));
  fft->inverse(khat.data(), full.data());

  // Extract the valid region row by row.
  const std::int64_t run = out.shape[static_cast<std::size_t>(d - 1)];
  const std::int64_t out_rows = out_total / run;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(d > 1 ? d - 1 : 0), 0);
  for (std::int64_t row = 0; row < out_rows; ++row) {
    std::int64_t base = 0;
    for (int j = 0; j < d - 1; ++j) base += idx[static_cast<std::size_t>(j)] * xstr[static_cast<std::size_t>(j)];
    std::memcpy(out.values.data() + row * run, full.data() + base,
                sizeof(double) * static_cast<std::size_t>(run));
    for (int j = d - 2; j >= 0; --j) {
      const auto sj = static_cast<std::size_t>(j);
      if (++idx[sj] < out.shape[sj]) break;
      idx[sj] = 0;
    }
  }
  return out;
}

ScanEngine::ScanEngine(const Geometry& geom, const Net& net, std::vector<Pattern> dict,
                       ScanOptions opt)
    : geom_(geom), net_(net), dict_(std::move(dict)), opt_(opt) {
  geom_.validate();
  if (net_.groups.empty()) throw ValidationError("scan: empty net");
  if (net_.d != geom_.d) throw ValidationError("scan: net dimension mismatches tensor geometry");
  if (std::abs(net_.L - geom_.L) > 1e-9 * std::max(1.0, geom_.L))
    throw ValidationError("scan: net L mismatches tensor geometry");
  if (dict_.empty()) throw ValidationError("scan: empty dictionary");
  for (const auto& f : dict_)
    if (f.d != geom_.d) throw ValidationError("scan: pattern dimension mismatches geometry");

  const int d = geom_.d;
  const std::int64_t cells = geom_.cells_per_axis();

  // Coarse-to-fine group order: h product descending, then lexicographic h.
  std::vector<std::size_t> order(net_.groups.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto product = [](const std::vector<double>& h) {
    double p = 1.0;
    for (double v : h) p *= v;
    return p;
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double pa = product(net_.groups[a].h);
    const double pb = product(net_.groups[b].h);
    if (pa != pb) return pa > pb;
    return net_.groups[a].h < net_.groups[b].h;
  });

  groups_.reserve(order.size());
  std::int64_t fft_groups = 0;
  for (std::size_t oi : order) {
    const NetGroup& src = net_.groups[oi];
    Group g;
    g.h = src.h;
    g.v = v_h(g.h, geom_.L);
    g.m.resize(static_cast<std::size_t>(d));
    g.cells.resize(static_cast<std::size_t>(d));
    g.centers.resize(static_cast<std::size_t>(d));
    std::int64_t widest = 0;
    for (int j = 0; j < d; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      if (!(src.h[sj] < geom_.L))
        throw ValidationError("scan: net scale does not fit the tensor");
      g.m[sj] = static_cast<std::int64_t>(std::ceil(2.0 * src.h[sj] * geom_.R - 1e-9));
      if (g.m[sj] > cells) throw ValidationError("scan: kernel footprint exceeds tensor");
      widest = std::max(widest, g.m[sj]);
      auto& cl = g.cells[sj];
      auto& ce = g.centers[sj];
      for (std::int64_t k = -src.kmax[sj]; k <= src.kmax[sj]; ++k) {
        const double t = static_cast<double>(k) * src.spacing[sj];
        const std::int64_t s = snap_start_cell(t, geom_.L, geom_.R, g.m[sj], cells);
        if (cl.empty() || cl.back() != s) {
          cl.push_back(s);
          ce.push_back(start_cell_to_center(s, geom_.L, geom_.R, g.m[sj]));
        }
      }
    }
    g.use_fft = widest > opt_.fft_crossover;
    if (g.use_fft) {
      ++fft_groups;
      any_fft_ = true;
    }
    groups_.push_back(std::move(g));
  }

  if (any_fft_) fft_ = RealFft::plan_for(geom_.shape());

  // Precompute spectra when they fit a fixed budget; otherwise FFT-group
  // kernels are rasterized per scan (identical arithmetic either way).
  const std::int64_t spectra_bytes = any_fft_
      ? fft_groups * static_cast<std::int64_t>(dict_.size()) * fft_->complex_count() * 16
      : 0;
  precomputed_spectra_ = any_fft_ && spectra_bytes <= 256'000'000;

  kernels_.assign(dict_.size(), {});
  spectra_.assign(dict_.size(), {});
  for (std::size_t p = 0; p < dict_.size(); ++p) {
    kernels_[p].resize(groups_.size());
    spectra_[p].resize(groups_.size());
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      const Group& g = groups_[gi];
      if (!g.use_fft) {
        kernels_[p][gi] = rasterize(dict_[p], g.h, geom_.R);
      } else if (precomputed_spectra_) {
        const Kernel k = rasterize(dict_[p], g.h, geom_.R);
        spectra_[p][gi] = kernel_spectrum(k);
      }
    }
  }
}

void ScanEngine::check_tensor(const TensorField& X) const {
  X.validate();
  if (!(X.geom == geom_)) throw ValidationError("scan: tensor geometry mismatches engine");
}

std::vector<std::complex<double>> ScanEngine::forward_tensor(const TensorField& X) const {
  if (!any_fft_) return {};
  std::vector<std::complex<double>> xhat(static_cast<std::size_t>(fft_->complex_count()));
  fft_->forward(X.values.data(), xhat.data());
  return xhat;
}

std::vector<std::complex<double>> ScanEngine::kernel_spectrum(const Kernel& k) const {
  const int d = geom_.d;
  const auto cells = geom_.shape();
  const auto xstr = row_major_strides(cells);
  std::vector<double> pad(static_cast<std::size_t>(fft_->total()), 0.0);
  const std::int64_t m_last = k.m[static_cast<std::size_t>(d - 1)];
  const std::int64_t rows = k.size() / m_last;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(d > 1 ? d - 1 : 0), 0);
  for (std::int64_t row = 0; row < rows; ++row) {
    std::int64_t base = 0;
    for (int j = 0; j < d - 1; ++j) base += idx[static_cast<std::size_t>(j)] * xstr[static_cast<std::size_t>(j)];
    std::memcpy(pad.data() + base, k.values.data() + row * m_last,
                sizeof(double) * static_cast<std::size_t>(m_last));
    for (int j = d - 2; j >= 0; --j) {
      const auto sj = static_cast<std::size_t>(j);
      if (++idx[sj] < k.m[sj]) break;
      idx[sj] = 0;
    }
  }
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(fft_->complex_count()));
  fft_->forward(pad.data(), spec.data());
  const double inv = 1.0 / static_cast<double>(fft_->total());
  for (auto& w : spec) w = std::conj(w) * inv;
  return spec;
}

ScanResult ScanEngine::scan_prepared(const TensorField& X,
                                     const std::vector<std::complex<double>>& xhat,
                                     std::size_t pattern_index) const {
  if (pattern_index >= dict_.size()) throw ValidationError("scan: pattern index out of range");
  const int d = geom_.d;
  const auto cells = geom_.shape();
  const auto xstr = row_major_strides(cells);

  ScanResult res;
  res.statistic = -std::numeric_limits<double>::infinity();
  res.per_scale_max.reserve(groups_.size());

  thread_local std::vector<double> conv;
  thread_local std::vector<std::complex<double>> yhat;
  Kernel local_kernel;

  std::vector<std::size_t> pos(static_cast<std::size_t>(d));
  std::vector<std::int64_t> start(static_cast<std::size_t>(d));

  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    const Group& g = groups_[gi];
    const double* full = nullptr;
    const Kernel* kern = nullptr;

    if (g.use_fft) {
      const std::vector<std::complex<double>>* spec;
      std::vector<std::complex<double>> local_spec;
      if (precomputed_spectra_) {
        spec = &spectra_[pattern_index][gi];
      } else {
        local_kernel = rasterize(dict_[pattern_index], g.h, geom_.R);
        local_spec = kernel_spectrum(local_kernel);
        spec = &local_spec;
      }
      const auto cc = static_cast<std::size_t>(fft_->complex_count());
      yhat.resize(cc);
      for (std::size_t w = 0; w < cc; ++w) yhat[w] = (*spec)[w] * xhat[w];
      conv.resize(static_cast<std::size_t>(fft_->total()));
      fft_->inverse(yhat.data(), conv.data());
      full = conv.data();
    } else {
      kern = &kernels_[pattern_index][gi];
    }

    double group_std = -std::numeric_limits<double>::infinity();
    double group_raw = -std::numeric_limits<double>::infinity();

    std::fill(pos.begin(), pos.end(), std::size_t{0});
    for (;;) {
      double c;
      if (full) {
        std::int64_t flat = 0;
        for (int j = 0; j < d; ++j) {
          const auto sj = static_cast<std::size_t>(j);
          flat += g.cells[sj][pos[sj]] * xstr[sj];
        }
        c = full[flat];
      } else {
        for (int j = 0; j < d; ++j) {
          const auto sj = static_cast<std::size_t>(j);
          start[sj] = g.cells[sj][pos[sj]];
        }
        c = window_inner(X.values, xstr, *kern, start.data());
      }

      double c_eff = c;
      bool neg = false;
      if (opt_.two_sided && -c > c_eff) {
        c_eff = -c;
        neg = true;
      }
      const double s = g.v * (c_eff - g.v);
      if (s > group_std) group_std = s;
      if (c > group_raw) group_raw = c;
      if (s > res.statistic) {
        res.statistic = s;
        res.argmax_h = g.h;
        res.argmax_t.resize(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) {
          const auto sj = static_cast<std::size_t>(j);
          res.argmax_t[sj] = g.centers[sj][pos[sj]];
        }
        res.raw_convolution_at_argmax = c_eff;
        res.negated = neg;
      }

      int j = d - 1;
      for (; j >= 0; --j) {
        const auto sj = static_cast<std::size_t>(j);
        if (++pos[sj] < g.cells[sj].size()) break;
        pos[sj] = 0;
      }
      if (j < 0) break;
    }

    res.per_scale_max.push_back({g.h, group_std, group_raw});
  }
  return res;
}

ScanResult ScanEngine::scan(const TensorField& X, std::size_t pattern_index) const {
  check_tensor(X);
  const auto xhat = forward_tensor(X);
  return scan_prepared(X, xhat, pattern_index);
}

std::vector<ScanResult> ScanEngine::scan_all(const TensorField& X) const {
  check_tensor(X);
  const auto xhat = forward_tensor(X);
  std::vector<ScanResult> results;
  results.reserve(dict_.size());
  for (std::size_t p = 0; p < dict_.size(); ++p) results.push_back(scan_prepared(X, xhat, p));
  return results;
}

PamssResult ScanEngine::run_pamss(const std::vector<TensorField>& Xs, int jobs) const {
  if (Xs.empty()) throw ValidationError("pamss: need at least one tensor");
  for (const auto& X : Xs) check_tensor(X);
  jobs = resolve_jobs(jobs);

  const auto n = static_cast<std::int64_t>(Xs.size());
  const auto P = static_cast<std::int64_t>(dict_.size());

  std::vector<std::vector<std::complex<double>>> xhats(static_cast<std::size_t>(n));
  if (any_fft_)
    parallel_for(jobs, n, [&](std::int64_t i) {
      xhats[static_cast<std::size_t>(i)] = forward_tensor(Xs[static_cast<std::size_t>(i)]);
    });

  std::vector<ScanResult> results(static_cast<std::size_t>(n * P));
  parallel_for(jobs, n * P, [&](std::int64_t task) {
    const std::int64_t i = task / P;
    const std::int64_t p = task % P;
    results[static_cast<std::size_t>(task)] =
        scan_prepared(Xs[static_cast<std::size_t>(i)], xhats[static_cast<std::size_t>(i)],
                      static_cast<std::size_t>(p));
  });

  PamssResult out;
  out.per_pattern_scores.reserve(static_cast<std::size_t>(P));
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  std::int64_t best = 0;
  for (std::int64_t p = 0; p < P; ++p) {
    double sum = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
      sum += results[static_cast<std::size_t>(i * P + p)].statistic;
    const double score = inv_sqrt_n * sum;
    out.per_pattern_scores.emplace_back(dict_[static_cast<std::size_t>(p)].name, score);
    if (score > out.per_pattern_scores[static_cast<std::size_t>(best)].second) best = p;
  }
  out.best_pattern = dict_[static_cast<std::size_t>(best)].name;
  out.E_n = out.per_pattern_scores[static_cast<std::size_t>(best)].second;
  out.per_tensor.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    out.per_tensor.push_back(results[static_cast<std::size_t>(i * P + best)]);
  return out;
}

ScanResult scan_single(const TensorField& X, const Pattern& f, const Net& net, ScanOptions opt) {
  ScanEngine engine(X.geom, net, {f}, opt);
  return engine.scan(X, 0);
}

PamssResult pamss(const std::vector<TensorField>& Xs, const std::vector<Pattern>& dict,
                  const Net& net, ScanOptions opt, int jobs) {
  if (Xs.empty()) throw ValidationError("pamss: need at least one tensor");
  ScanEngine engine(Xs.front().geom, net, dict, opt);
  return engine.run_pamss(Xs, jobs);
}

}  // namespace mss
