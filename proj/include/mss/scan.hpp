#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mss/defaults.hpp"
#include "mss/fft.hpp"
#include "mss/net.hpp"
#include "mss/patterns.hpp"
#include "mss/tensor.hpp"

namespace mss {

// Scale correction sqrt(2 * sum_j log(L / h_j)), strictly decreasing in
// every h_j; equalizes per-scale null maxima so no scale dominates.
double v_h(const std::vector<double>& h, double L);

enum class ConvMethod { Auto, Direct, Fft };

// Valid-region cross-correlation output: shape_j = cells_j - m_j + 1,
// values[s] = <kernel, window of X starting at cell s>.
struct Convolution {
  std::vector<double> values;
  std::vector<std::int64_t> shape;
};

Convolution convolve_at_scale(const TensorField& X, const Kernel& k,
                              ConvMethod method = ConvMethod::Auto);

struct ScanOptions {
  bool two_sided = false;
  int fft_crossover = defaults::kFftCrossover;  // per-axis footprint cells
};

struct ScaleMax {
  std::vector<double> h;
  double standardized_max = 0.0;  // max over the scale's entries of v(c - v)
  double raw_max = 0.0;           // max over the scale's entries of c
};

struct ScanResult {
  double statistic = 0.0;
  std::vector<double> argmax_t;  // realized (cell-snapped) window center
  std::vector<double> argmax_h;
  double raw_convolution_at_argmax = 0.0;  // oriented: conv of -f if negated
  bool negated = false;                    // argmax taken on the -f branch
  std::vector<ScaleMax> per_scale_max;     // coarse-to-fine scale order
};

struct PamssResult {
  std::string best_pattern;
  double E_n = 0.0;
  std::vector<std::pair<std::string, double>> per_pattern_scores;  // dict order
  std::vector<ScanResult> per_tensor;                              // winner's scans
};

// Precomputes per-scale kernels, spectra, and snapped entry lattices for one
// (geometry, net, dictionary) so repeated scans are cheap.  Scans are pure;
// results are bit-identical for any worker count.
class ScanEngine {
 public:
  ScanEngine(const Geometry& geom, const Net& net, std::vector<Pattern> dict,
             ScanOptions opt = {});

  const Geometry& geometry() const { return geom_; }
  const Net& net() const { return net_; }
  const std::vector<Pattern>& dict() const { return dict_; }
  const ScanOptions& options() const { return opt_; }

  ScanResult scan(const TensorField& X, std::size_t pattern_index) const;
  std::vector<ScanResult> scan_all(const TensorField& X) const;
  PamssResult run_pamss(const std::vector<TensorField>& Xs, int jobs = 1) const;

 private:
  struct Group {
    std::vector<double> h;
    double v = 0.0;
    std::vector<std::int64_t> m;
    // Per-axis deduplicated start cells (ascending) with snapped centers.
    std::vector<std::vector<std::int64_t>> cells;
    std::vector<std::vector<double>> centers;
    bool use_fft = false;
  };

  void check_tensor(const TensorField& X) const;
  std::vector<std::complex<double>> forward_tensor(const TensorField& X) const;
  ScanResult scan_prepared(const TensorField& X,
                           const std::vector<std::complex<double>>& xhat,
                           std::size_t pattern_index) const;
  // Correlation spectrum conj(FFT(kernel)) / cell_count for an FFT group.
  std::vector<std::complex<double>> kernel_spectrum(const Kernel& k) const;

  Geometry geom_;
  Net net_;
  std::vector<Pattern> dict_;
  ScanOptions opt_;
  std::vector<Group> groups_;  // coarse to fine (h product descending)
  // kernels_[p][g] kept for direct groups (and for FFT groups only when
  // spectra are not precomputed); spectra_[p][g] kept when the memory
  // budget allows precomputation.
  std::vector<std::vector<Kernel>> kernels_;
  std::vector<std::vector<std::vector<std::complex<double>>>> spectra_;
  bool precomputed_spectra_ = false;
  bool any_fft_ = false;
  std::shared_ptr<const RealFft> fft_;
};

// One-shot conveniences (build a throwaway engine).
ScanResult scan_single(const TensorField& X, const Pattern& f, const Net& net,
                       ScanOptions opt = {});
PamssResult pamss(const std::vector<TensorField>& Xs, const std::vector<Pattern>& dict,
                  const Net& net, ScanOptions opt = {}, int jobs = 1);

}  // namespace mss
