#include "mss/geometry.hpp"

#include <cmath>
#include <string>

#include "mss/error.hpp"

namespace mss {

void Geometry::validate() const {
  if (d < 1 || d > 8) throw ValidationError("geometry: d must be in [1, 8], got " + std::to_string(d));
  if (R < 1) throw ValidationError("geometry: R must be >= 1, got " + std::to_string(R));
  if (!(L > 0.0)) throw ValidationError("geometry: L must be positive");
  const double cells = 2.0 * L * R;
  const double rounded = std::nearbyint(cells);
  if (std::abs(cells - rounded) > 1e-9 || rounded < 2.0)
    throw ValidationError("geometry: 2*L*R must be a whole number of cells >= 2");
  if (rounded > 1e9) throw ValidationError("geometry: axis cell count exceeds 1e9");
}

std::int64_t Geometry::cells_per_axis() const {
  return static_cast<std::int64_t>(std::llround(2.0 * L * R));
}

std::vector<std::int64_t> Geometry::shape() const {
  return std::vector<std::int64_t>(static_cast<std::size_t>(d), cells_per_axis());
}

std::int64_t Geometry::cell_count() const {
  std::int64_t n = 1;
  const std::int64_t per = cells_per_axis();
  for (int j = 0; j < d; ++j) {
    if (n > (std::int64_t{1} << 62) / per) throw ValidationError("geometry: cell count overflow");
    n *= per;
  }
  return n;
}

std::int64_t snap_start_cell(double t, double L, int R, std::int64_t m, std::int64_t cells) {
  if (m > cells) throw ValidationError("snap_start_cell: window footprint exceeds grid");
  // Window center (s + m/2)/R - L = t  =>  s = (t + L)*R - m/2.
  std::int64_t s = std::llround((t + L) * R - 0.5 * static_cast<double>(m));
  if (s < 0) s = 0;
  if (s > cells - m) s = cells - m;
  return s;
}

std::int64_t rel_start_cell(double t, int R, std::int64_t m) {
  return std::llround(t * R - 0.5 * static_cast<double>(m));
}

double start_cell_to_center(std::int64_t s, double L, int R, std::int64_t m) {
  return (static_cast<double>(s) + 0.5 * static_cast<double>(m)) / R - L;
}

std::vector<std::int64_t> row_major_strides(const std::vector<std::int64_t>& shape) {
  std::vector<std::int64_t> strides(shape.size(), 1);
  for (int j = static_cast<int>(shape.size()) - 2; j >= 0; --j)
    strides[static_cast<std::size_t>(j)] = strides[static_cast<std::size_t>(j) + 1] * shape[static_cast<std::size_t>(j) + 1];
  return strides;
}

}  // namespace mss
