#pragma once

#include <vector>

#include "mss/defaults.hpp"
#include "mss/patterns.hpp"

namespace mss {

// A pair of (location, scale) parameter points for one pattern.
struct ParamPair {
  std::vector<double> t_a, h_a;
  std::vector<double> t_b, h_b;

  void validate(int d) const;
};

// Inner product of two unit-norm kernels placed at centers ta, tb on the
// common cell grid (both kernels must share R).  Placement uses the same
// center-to-start-cell rounding the scanner uses, so this is exactly the
// correlation the scan realizes.
double kernel_inner(const Kernel& a, const std::vector<double>& ta,
                    const Kernel& b, const std::vector<double>& tb);

// Discrete kernel metric nu = sqrt(2 - 2 <a, b>) between the rasterizations
// of f at the two parameter points.
double nu(const Pattern& f, const ParamPair& pair, int R = defaults::kDefaultR);

// Closed-form upper bounds for nu^2 under the two smoothness conditions.
// gamma1 is the pattern's total-variation constant; gamma2 its smoothness
// exponent.  C is the calibrated leading constant.
double nu_bound_tvc(double gamma1, const ParamPair& pair, double C = defaults::kTvcC);
double nu_bound_ahc(double gamma2, const ParamPair& pair, double C = defaults::kAhcC);

}  // namespace mss
