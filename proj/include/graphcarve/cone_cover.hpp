#pragma once

#include "graphcarve/geom.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace graphcarve {

struct CoverCertificate {
  std::size_t samples_a = 0;  // directions of X(0,V,alpha) checked against the union of X+(w_j, alpha s)
  std::size_t samples_b = 0;
  std::size_t samples_c = 0;
  double b_prime = 0.0;       // max |z - w_j| / alpha over z in X+(0, w_j, alpha) cap S
  double max_perp_ratio = 0.0; // max |pi_{V^perp} z| / alpha over the same samples
  bool passed = false;
};

/// One-sided directions covering the two-sided cone X(0, V, alpha).
struct DirectionCover {
  Subspace v;
  double alpha = 0.0;
  double s = 1.0;
  std::vector<Vec> directions;
  double b_used = 0.0;
  /// m (alpha s)^{d-1}.
  double c_cover = 0.0;
  std::size_t net_samples = 0;
  CoverCertificate certificate;

  std::size_t size() const { return directions.size(); }
};

struct CoverOptions {
  std::size_t check_samples = 100000;
  std::uint64_t seed = 7;
  /// Multiplies the size of the quasi-uniform sample the net is drawn from.
  double oversample = 1.0;
};

/// Greedy (alpha s)-net of X(0,V,alpha) cap S^{d-1}, certified on random directions.
/// Throws InvariantViolation when inclusion (a) or (c) fails on a sample.
DirectionCover build_cover(const Subspace& v, double alpha, double s, const CoverOptions& opt = {});

std::string cover_to_json(const DirectionCover& cover);
DirectionCover cover_from_json(const std::string& text);

}  // namespace graphcarve
