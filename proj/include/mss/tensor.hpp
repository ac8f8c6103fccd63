#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mss/geometry.hpp"

namespace mss {

// Planted-signal parameters attached to a tensor when the generator knows
// them.  t and h are the snapped center and scale actually embedded.
struct GroundTruth {
  std::string pattern;
  double mu = 0.0;
  std::vector<double> t;
  std::vector<double> h;
};

enum class ProvenanceKind { Null, Embedded, External };

std::string to_string(ProvenanceKind k);
ProvenanceKind provenance_from_string(const std::string& s);

struct Provenance {
  ProvenanceKind kind = ProvenanceKind::External;
  std::optional<GroundTruth> truth;
};

// Dense row-major (last axis fastest) sample of a field over [-L, L]^d.
struct TensorField {
  Geometry geom;
  std::vector<double> values;
  Provenance prov;

  // Throws ValidationError if values.size() mismatches the geometry.
  void validate() const;
};

}  // namespace mss
