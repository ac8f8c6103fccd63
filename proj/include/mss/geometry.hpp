#pragma once

#include <cstdint>
#include <vector>

namespace mss {

// Grid over the domain [-L, L]^d, with R cells per unit length on every axis
// (so 2*L*R cells per axis).  Cell k on an axis covers
// [k/R - L, (k+1)/R - L); its center is (k + 0.5)/R - L.
struct Geometry {
  int d = 1;
  double L = 1.0;
  int R = 16;

  // Throws ValidationError unless d in [1,8], R >= 1, L > 0 and 2*L*R is a
  // whole (even) number of cells per axis.
  void validate() const;

  std::int64_t cells_per_axis() const;  // 2*L*R
  std::vector<std::int64_t> shape() const;
  std::int64_t cell_count() const;  // cells_per_axis()^d

  bool operator==(const Geometry&) const = default;
};

// A window of footprint m cells whose start cell is s occupies cells
// [s, s+m) and has center (s + m/2)/R - L.  snap_start_cell returns the
// valid start cell whose window center is nearest to coordinate t, clamping
// so the window stays inside the grid.
std::int64_t snap_start_cell(double t, double L, int R, std::int64_t m, std::int64_t cells);

// Same rounding without the grid clamp, in L-free cell units (start cell
// relative to the origin-anchored lattice).  Used where only relative
// placement matters, e.g. kernel inner products.
std::int64_t rel_start_cell(double t, int R, std::int64_t m);

double start_cell_to_center(std::int64_t s, double L, int R, std::int64_t m);

// Row-major strides (last axis fastest) for a shape.
std::vector<std::int64_t> row_major_strides(const std::vector<std::int64_t>& shape);

}  // namespace mss
