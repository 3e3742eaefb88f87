#include "graphcarve/grassmann.hpp"

#include "graphcarve/error.hpp"

#include <algorithm>
#include <cmath>

namespace graphcarve {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

GrassmannSampler GrassmannSampler::child(std::uint64_t index) const {
  GrassmannSampler c = *this;
  c.seed = derive_seed(seed, index);
  return c;
}

Mat random_frame(std::mt19937_64& rng, int d, int n) {
  std::normal_distribution<double> normal;
  Mat g(d, n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < d; ++r) g(r, c) = normal(rng);
  }
  // Modified Gram-Schmidt; a Gaussian matrix is full rank with probability one.
  for (int c = 0; c < n; ++c) {
    for (int i = 0; i < c; ++i) g.col(c) -= g.col(i).dot(g.col(c)) * g.col(i);
    const double norm = g.col(c).norm();
    if (norm < 1e-12) return random_frame(rng, d, n);
    g.col(c) /= norm;
  }
  return g;
}

double frame_distance(const Mat& a, const Mat& b) {
  if (a.cols() == 1) {
    const double c = a.col(0).dot(b.col(0));
    return std::sqrt(std::max(0.0, 1.0 - c * c));
  }
  const Mat m = a.transpose() * b;
  Eigen::JacobiSVD<Mat> svd(m);
  const double smin = std::min(1.0, svd.singularValues().minCoeff());
  return std::sqrt(std::max(0.0, 1.0 - smin * smin));
}

GammaDraw sample_gamma(const GrassmannSampler& sampler, std::size_t count) {
  if (count < 1) throw InputError("sample_gamma: count must be >= 1");
  if (sampler.n < 1 || sampler.n >= sampler.d || sampler.d > kMaxDim) {
    throw InputError("sample_gamma: need 1 <= n < d <= " + std::to_string(kMaxDim));
  }
  if (sampler.center && (sampler.center->ambient_dim() != sampler.d || sampler.center->dim() != sampler.n)) {
    throw InputError("sample_gamma: ball center has the wrong shape");
  }
  std::mt19937_64 rng(sampler.seed);
  GammaDraw out;
  out.planes.reserve(count);
  while (out.planes.size() < count) {
    Mat frame = random_frame(rng, sampler.d, sampler.n);
    ++out.attempts;
    if (sampler.center) {
      if (frame_distance(frame, sampler.center->frame()) > sampler.radius) {
        const double rate = static_cast<double>(out.planes.size()) / static_cast<double>(out.attempts);
        if (out.attempts >= kProbeBatch && rate < 1e-6) {
          throw InputError("sample_gamma: infeasible ball (acceptance rate " + std::to_string(rate) +
                           " after " + std::to_string(out.attempts) + " attempts)");
        }
        continue;
      }
    }
    out.planes.emplace_back(frame);
  }
  out.acceptance_rate = static_cast<double>(out.planes.size()) / static_cast<double>(out.attempts);
  return out;
}

namespace {

// max r_i over i = 1..n for a given alpha_0; +inf when some eps_i reaches 1.
double max_perturbation(int n, double a0) {
  std::vector<double> eps{a0};
  double worst = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double e = eps[static_cast<std::size_t>(i - 1)];
    if (e >= 1.0) return INFINITY;
    const double root = std::sqrt(1.0 - e * e);
    worst = std::max(worst, e / root + (1.0 / root - 1.0));
    double sum = a0 * a0;
    for (int k = 1; k <= i; ++k) {
      const double ek = eps[static_cast<std::size_t>(k - 1)];
      sum += ek * ek / (1.0 - ek * ek);
    }
    eps.push_back(std::sqrt(sum));
  }
  return worst;
}

}  // namespace

double alpha0(int n, double upsilon) {
  if (n < 1 || !(upsilon > 0.0)) throw InputError("alpha0: need n >= 1 and upsilon > 0");
  const double target = upsilon / (4.0 * std::sqrt(static_cast<double>(n)));
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (max_perturbation(n, mid) <= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

Subspace construct_v0(const Subspace& w, const Vec& z, double upsilon) {
  if (z.size() != w.ambient_dim()) throw InputError("construct_v0: dimension mismatch");
  const double zn = z.norm();
  if (!(zn > 0.0)) throw InputError("construct_v0: z must be nonzero");
  const double a0 = alpha0(w.dim(), upsilon);
  if (project(w, z).norm() > a0 * zn) {
    throw InputError("construct_v0: infeasible, |pi_W z| exceeds alpha0 |z| with alpha0 = " +
                     std::to_string(a0));
  }
  const int d = w.ambient_dim();
  const int n = w.dim();
  Mat basis(d, n + 1);
  basis.col(0) = z / zn;
  for (int i = 1; i <= n; ++i) {
    Vec u = w.frame().col(i - 1);
    for (int pass = 0; pass < 2; ++pass) {
      for (int k = 0; k < i; ++k) u -= basis.col(k).dot(u) * basis.col(k);
    }
    const double norm = u.norm();
    if (norm < 1e-12) throw InputError("construct_v0: degenerate frame");
    basis.col(i) = u / norm;
  }
  return Subspace(Mat(basis.rightCols(n)));
}

MeasureEstimate measure_lower_bound_mc(const Subspace& w, const Vec& z, double delta, double upsilon,
                                       std::uint64_t samples, std::uint64_t seed, double delta0) {
  if (samples < 1000) throw InputError("measure_lower_bound_mc: need at least 1000 samples");
  if (z.size() != w.ambient_dim()) throw InputError("measure_lower_bound_mc: dimension mismatch");
  const double zn = z.norm();
  if (!(zn > 0.0) || !(delta > 0.0)) throw InputError("measure_lower_bound_mc: need z != 0, delta > 0");
  const int d = w.ambient_dim();
  const int n = w.dim();
  const double delta2 = delta * delta;
  std::mt19937_64 rng(seed);
  std::uint64_t hits = 0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    const Mat frame = random_frame(rng, d, n);
    const Vec coords = frame.transpose() * z;
    if (coords.squaredNorm() > delta2) continue;
    if (frame_distance(frame, w.frame()) > upsilon) continue;
    ++hits;
  }
  MeasureEstimate out;
  out.samples = samples;
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  const double rel = delta / zn;
  out.a_hat = p;
  out.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  out.ratio = p / std::pow(rel, n);
  out.ratio_std_error = out.std_error / std::pow(rel, n);
  out.in_regime = rel < std::min(delta0, upsilon / 2.0) && project(w, z).norm() <= alpha0(n, upsilon) * zn;
  return out;
}

}  // namespace graphcarve
