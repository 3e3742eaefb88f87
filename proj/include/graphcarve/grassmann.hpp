#pragma once

#include "graphcarve/geom.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace graphcarve {

/// splitmix64 mix of (seed, index); used for every derived seed in the library.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Draws from gamma_{d,n}, optionally restricted to the ball B(center, radius).
struct GrassmannSampler {
  int d = 2;
  int n = 1;
  std::uint64_t seed = 0;
  std::optional<Subspace> center;
  double radius = 0.0;

  GrassmannSampler child(std::uint64_t index) const;
};

struct GammaDraw {
  std::vector<Subspace> planes;
  std::uint64_t attempts = 0;
  double acceptance_rate = 1.0;
};

/// Ball mode throws InputError when nothing is accepted in the first
/// kProbeBatch attempts or when the running acceptance drops below 1e-6.
GammaDraw sample_gamma(const GrassmannSampler& sampler, std::size_t count);

inline constexpr std::uint64_t kProbeBatch = 200000;

/// One unrestricted gamma_{d,n} draw as a d x n orthonormal frame (no canonicalization).
Mat random_frame(std::mt19937_64& rng, int d, int n);

/// grassmann_distance for orthonormal frames of equal shape, via principal angles.
double frame_distance(const Mat& a, const Mat& b);

/// Largest alpha_0 with max r_i <= upsilon / (4 sqrt n) for the Appendix-A recursion.
double alpha0(int n, double upsilon);

/// V_0 with pi_{V_0} z = 0 close to W. Requires |pi_W z| <= alpha0(n, upsilon) |z|.
Subspace construct_v0(const Subspace& w, const Vec& z, double upsilon);

struct MeasureEstimate {
  double a_hat = 0.0;
  double std_error = 0.0;
  double ratio = 0.0;
  double ratio_std_error = 0.0;
  std::uint64_t samples = 0;
  /// delta/|z| < min(delta0, upsilon/2); the lower bound is only claimed in this regime.
  bool in_regime = false;
};

/// Monte-Carlo estimate of gamma{V : |pi_V z| <= delta, dist(V, W) <= upsilon}.
MeasureEstimate measure_lower_bound_mc(const Subspace& w, const Vec& z, double delta, double upsilon,
                                       std::uint64_t samples, std::uint64_t seed,
                                       double delta0 = 0.1);

}  // namespace graphcarve
