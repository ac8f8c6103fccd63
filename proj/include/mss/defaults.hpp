#pragma once

#include <array>
#include <cstdint>

namespace mss::defaults {

// Rasterization resolution (cells per unit length) used when callers do not
// pick one, and the smallest resolution the rasterizer accepts.
inline constexpr int kDefaultR = 16;
inline constexpr int kMinR = 4;

// Per-axis footprint (in cells) above which scan convolutions switch from
// direct accumulation to the FFT path.
inline constexpr int kFftCrossover = 64;

// Hard cap on net size; build_net refuses nets larger than this and reports
// the (alpha, beta) pair that produced the blow-up.  Net storage is per
// scale group (a lattice descriptor), so large counts are cheap to hold;
// the cap bounds scan work, and two-dimensional quarter-eps nets already
// need ~1e8 entries.
inline constexpr std::int64_t kMaxNetEntries = 500'000'000;

// Net sizing constants: alpha = kCAlpha * eps^(1/gamma),
// beta = 1 + kCBeta * ((1+eps)^(2/d) - 1).  Calibrated by a coverage
// feasibility search over the built-in dictionary (calibrate_net_constants
// plus multi-seed verify_net sweeps at d=1/2, L up to 256, eps in
// {0.25, 0.5}); worst observed distance stays below 0.67*eps.  The scale
// ladder (kCBeta) binds first: the stiffest built-in profile needs
// beta - 1 of a few percent before location spacing matters.
inline constexpr double kCAlpha = 0.12;
inline constexpr double kCBeta = 0.05;

// Leading constants for the closed-form metric upper bounds, calibrated so
// the bound dominates the measured metric on 16k random realizable
// (cell-snapped) parameter pairs per pattern at d=1/2.  Largest observed
// requirement: 7.8 (TVC) and 90 (AHC), both from the oscillatory profile,
// whose squared gradient norm the AHC constant must absorb.
inline constexpr double kTvcC = 10.0;
inline constexpr double kAhcC = 120.0;

// Confidence grid used when calibrating the threshold constant K.
inline constexpr std::array<double, 3> kKDeltaGrid = {0.1, 0.05, 0.01};

// Floor applied to calibrated K so a degenerate quantile never yields K = 0.
inline constexpr double kMinK = 1e-9;

// Default failure probability for thresholds when a caller does not set one.
inline constexpr double kDefaultDelta = 0.05;

}  // namespace mss::defaults
