#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mss {

enum class PatternKind {
  QuadraticBump,
  TruncatedGaussian,
  WindowedSinusoid,
  TensorCosine,
  Tabulated,
};

std::string to_string(PatternKind k);
PatternKind pattern_kind_from_string(const std::string& s);

// Node-centered samples over [-1,1]^d (shape[j] >= 2 nodes per axis,
// endpoints included), interpolated multilinearly.
struct TabulatedData {
  std::vector<std::int64_t> shape;
  std::vector<double> values;  // row-major, last axis fastest
};

// A unit-L2-norm pattern supported on [-1,1]^d.  The four built-in families
// are tensor products of one fixed axis profile; tabulated patterns may be
// arbitrary.  gamma1 is the isotropic total variation (location stiffness),
// gamma2 the smoothness exponent in (0,1], and c_a the constant such that
// ||f - S_delta f||^2 <= c_a * ||delta||^(2*gamma2).
class Pattern {
 public:
  std::string name;
  PatternKind kind = PatternKind::QuadraticBump;
  int d = 1;
  std::map<std::string, double> params;
  double gamma1 = 0.0;
  double gamma2 = 1.0;
  double c_a = 0.0;

  double evaluate(const std::vector<double>& u) const;
  double evaluate(const double* u) const;

  bool separable() const { return kind != PatternKind::Tabulated; }

  // Normalized axis profile and its derivative; valid only for separable
  // patterns and |u| <= 1.
  double axis_value(double u) const;
  double axis_deriv(double u) const;

  const std::shared_ptr<const TabulatedData>& table() const { return table_; }

 private:
  friend Pattern make_pattern(PatternKind, int, const std::map<std::string, double>&, const std::string&);
  friend Pattern make_tabulated(const std::string&, int, TabulatedData,
                                std::optional<double>, std::optional<double>, std::optional<double>);

  double axis_scale_ = 1.0;  // per-axis normalization of the profile
  std::shared_ptr<const TabulatedData> table_;
};

// Validates params for the family and fills in normalization and the
// declared stiffness constants.  Unknown parameter names are rejected.
Pattern make_pattern(PatternKind kind, int d,
                     const std::map<std::string, double>& params = {},
                     const std::string& name = "");

// Wraps node samples as a pattern (renormalized to unit L2).  Stiffness
// constants may be declared or are measured from the table.
Pattern make_tabulated(const std::string& name, int d, TabulatedData data,
                       std::optional<double> gamma1 = std::nullopt,
                       std::optional<double> gamma2 = std::nullopt,
                       std::optional<double> c_a = std::nullopt);

// The default four-pattern dictionary at dimension d.
std::vector<Pattern> built_in_dictionary(int d);

// Discrete sample of f scaled to half-width h, at R cells per unit length.
// Footprint m_j = ceil(2*h_j*R) cells; samples are taken at cell centers of
// the footprint window and renormalized to unit l2 norm.
struct Kernel {
  std::vector<double> values;  // row-major, last axis fastest
  std::vector<std::int64_t> m;
  std::vector<double> h;
  int R = 0;

  std::int64_t size() const;
};

Kernel rasterize(const Pattern& f, const std::vector<double>& h, int R);

// Isotropic total variation integral \int ||grad f||_2 du by midpoint
// quadrature at R cells per unit length (analytic gradients for separable
// families, central differences for tabulated ones).
double tv_norm(const Pattern& f, int R);

// Empirical check of the declared smoothness: samples random shifts delta,
// measures A(delta) = ||f - S_delta f||^2, fits the exponent on small
// shifts, and verifies A <= c_a * ||delta||^(2*gamma2) throughout.
struct HolderReport {
  double gamma_declared = 1.0;
  double c_declared = 0.0;
  double gamma_hat = 0.0;  // fitted exponent (half the log-log slope)
  double c_hat = 0.0;      // max over samples of A / ||delta||^(2*gamma_declared)
  bool dominated = false;
  int samples = 0;
};

HolderReport holder_check(const Pattern& f, int sample_count, std::uint64_t seed);

}  // namespace mss
