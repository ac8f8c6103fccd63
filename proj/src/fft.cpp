#include "mss/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>

#include "mss/error.hpp"

namespace mss {

namespace {

std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

// Per-thread FFTW-aligned scratch, reused across transforms of the same
// size.  Keys carry a role tag: a real buffer and a complex buffer of equal
// byte size must never alias (for 1D even N they are the same size).
class ScratchPool {
 public:
  ~ScratchPool() {
    for (auto& [key, ptr] : bufs_) fftw_free(ptr);
  }
  void* get(int role, std::size_t bytes) {
    const auto key = std::make_pair(role, bytes);
    auto it = bufs_.find(key);
    if (it != bufs_.end()) return it->second;
    void* p = fftw_malloc(bytes);
    if (!p) throw RuntimeFault("fft: scratch allocation failed");
    bufs_.emplace(key, p);
    return p;
  }

 private:
  std::map<std::pair<int, std::size_t>, void*> bufs_;
};

ScratchPool& scratch() {
  thread_local ScratchPool pool;
  return pool;
}

}  // namespace

RealFft::RealFft(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
  if (shape_.empty()) throw ValidationError("fft: empty shape");
  total_ = 1;
  std::vector<int> dims;
  dims.reserve(shape_.size());
  for (std::int64_t n : shape_) {
    if (n < 1 || n > (1 << 30)) throw ValidationError("fft: bad axis length");
    total_ *= n;
    dims.push_back(static_cast<int>(n));
  }
  complex_count_ = total_ / shape_.back() * (shape_.back() / 2 + 1);

  double* rbuf = static_cast<double*>(fftw_malloc(sizeof(double) * static_cast<std::size_t>(total_)));
  fftw_complex* cbuf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(complex_count_)));
  if (!rbuf || !cbuf) {
    fftw_free(rbuf);
    fftw_free(cbuf);
    throw RuntimeFault("fft: plan buffer allocation failed");
  }
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_fwd_ = fftw_plan_dft_r2c(static_cast<int>(dims.size()), dims.data(), rbuf, cbuf, FFTW_ESTIMATE);
    plan_inv_ = fftw_plan_dft_c2r(static_cast<int>(dims.size()), dims.data(), cbuf, rbuf, FFTW_ESTIMATE);
  }
  fftw_free(rbuf);
  fftw_free(cbuf);
  if (!plan_fwd_ || !plan_inv_) throw RuntimeFault("fft: planning failed");
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_inv_) fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
}

std::shared_ptr<const RealFft> RealFft::plan_for(const std::vector<std::int64_t>& shape) {
  static std::mutex registry_mu;
  static std::map<std::vector<std::int64_t>, std::weak_ptr<const RealFft>> registry;

  std::lock_guard<std::mutex> lock(registry_mu);
  auto& slot = registry[shape];
  if (auto existing = slot.lock()) return existing;
  std::shared_ptr<const RealFft> created(new RealFft(shape));
  slot = created;
  return created;
}

void RealFft::forward(const double* in, std::complex<double>* out) const {
  double* rbuf = static_cast<double*>(scratch().get(0, sizeof(double) * static_cast<std::size_t>(total_)));
  fftw_complex* cbuf = static_cast<fftw_complex*>(scratch().get(1, sizeof(fftw_complex) * static_cast<std::size_t>(complex_count_)));
  std::memcpy(rbuf, in, sizeof(double) * static_cast<std::size_t>(total_));
  fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_fwd_), rbuf, cbuf);
  // std::complex<double> is layout-compatible with fftw_complex (double[2])
  std::memcpy(reinterpret_cast<double*>(out), cbuf,
              sizeof(fftw_complex) * static_cast<std::size_t>(complex_count_));
}

void RealFft::inverse(const std::complex<double>* in, double* out) const {
  double* rbuf = static_cast<double*>(scratch().get(0, sizeof(double) * static_cast<std::size_t>(total_)));
  fftw_complex* cbuf = static_cast<fftw_complex*>(scratch().get(1, sizeof(fftw_complex) * static_cast<std::size_t>(complex_count_)));
  std::memcpy(cbuf, reinterpret_cast<const double*>(in),
              sizeof(fftw_complex) * static_cast<std::size_t>(complex_count_));
  fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_inv_), cbuf, rbuf);
  std::memcpy(out, rbuf, sizeof(double) * static_cast<std::size_t>(total_));
}

}  // namespace mss
