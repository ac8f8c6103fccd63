#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

namespace mss {

// Shared, cached real-to-complex FFT plans for row-major tensors.  Plans are
// created once per shape (planner access is serialized; FFTW's planner is
// not thread safe) and executed on per-thread scratch, so concurrent
// transforms of distinct data need no locking and results are deterministic.
class RealFft {
 public:
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  static std::shared_ptr<const RealFft> plan_for(const std::vector<std::int64_t>& shape);

  // Unnormalized transforms: inverse(forward(x)) == total() * x.
  void forward(const double* in, std::complex<double>* out) const;
  void inverse(const std::complex<double>* in, double* out) const;

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t total() const { return total_; }
  std::int64_t complex_count() const { return complex_count_; }

 private:
  explicit RealFft(std::vector<std::int64_t> shape);

  std::vector<std::int64_t> shape_;
  std::int64_t total_ = 0;
  std::int64_t complex_count_ = 0;
  void* plan_fwd_ = nullptr;
  void* plan_inv_ = nullptr;
};

}  // namespace mss
