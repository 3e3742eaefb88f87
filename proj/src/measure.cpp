#include "graphcarve/cloud.hpp"
#include "graphcarve/error.hpp"
#include "graphcarve/grassmann.hpp"

#include <algorithm>
#include <limits>

namespace graphcarve {

namespace {

// Smallest-radius scale j in `range` with dist2 <= 4^-j, or j_max + 1 style sentinels.
int finest_scale(double dist2, const ScaleRange& range) {
  if (dist2 <= 0.0) return range.j_max;
  int j = static_cast<int>(std::floor(-0.5 * std::log2(dist2)));
  while (dist2 > std::ldexp(1.0, -2 * j)) --j;
  while (dist2 <= std::ldexp(1.0, -2 * (j + 1))) ++j;
  return std::min(j, range.j_max);
}

}  // namespace

DensityProfile density_profile(const WeightedCloud& c, const Subset& s, const ScaleRange& scales) {
  DensityProfile prof;
  prof.scales = scales;
  prof.points = s;
  const std::size_t width = static_cast<std::size_t>(scales.size());
  prof.mass.assign(s.size() * width, 0.0);
  if (width == 0) return prof;
  const std::vector<char> mask = subset_mask(c, s);
  const double outer = scale_radius(scales.j_min);
  const int d = c.ambient_dim();
  std::vector<double> hist(width);
  for (std::size_t row = 0; row < s.size(); ++row) {
    std::fill(hist.begin(), hist.end(), 0.0);
    const double* x = c.point(s[row]);
    for (std::size_t q : ball_query(c, x, outer, &mask)) {
      const int j = finest_scale(squared_distance(x, c.point(q), d), scales);
      if (j < scales.j_min) continue;
      hist[static_cast<std::size_t>(j - scales.j_min)] += c.weight(q);
    }
    double acc = 0.0;
    for (std::size_t k = width; k-- > 0;) {
      acc += hist[k];
      prof.mass[row * width + k] = acc;
    }
  }
  return prof;
}

AdrReport adr_check(const WeightedCloud& c, const Subset& s, const ScaleRange& scales,
                    std::optional<std::pair<double, double>> band) {
  if (s.empty()) throw InputError("adr_check: empty cloud");
  if (scales.empty()) throw InputError("adr_check: empty scale range");
  const DensityProfile prof = density_profile(c, s, scales);
  AdrReport rep;
  rep.scales = scales;
  rep.c1_hat = std::numeric_limits<double>::infinity();
  rep.c2_hat = 0.0;
  const int n = c.intrinsic_dim();
  for (std::size_t row = 0; row < s.size(); ++row) {
    for (int j = scales.j_min; j <= scales.j_max; ++j) {
      const double ratio = prof.at(row, j) / std::pow(scale_radius(j), n);
      rep.c1_hat = std::min(rep.c1_hat, ratio);
      rep.c2_hat = std::max(rep.c2_hat, ratio);
      if (band && (ratio < band->first || ratio > band->second)) rep.violations.push_back({s[row], j, ratio});
    }
  }
  return rep;
}

PruneResult prune_low_density(const WeightedCloud& c, const Subset& s, double eps, const ScaleRange& scales) {
  if (!(eps > 0.0)) throw InputError("prune_low_density: eps must be positive");
  PruneResult res;
  res.kept = s;
  const int n = c.intrinsic_dim();
  std::vector<double> thresholds;
  for (int j = scales.j_min; j <= scales.j_max; ++j) thresholds.push_back(eps * std::pow(scale_radius(j), n));
  while (!res.kept.empty() && !scales.empty()) {
    ++res.sweeps;
    const DensityProfile prof = density_profile(c, res.kept, scales);
    Subset next;
    next.reserve(res.kept.size());
    for (std::size_t row = 0; row < res.kept.size(); ++row) {
      bool low = false;
      for (int j = scales.j_min; j <= scales.j_max && !low; ++j) {
        low = prof.at(row, j) <= thresholds[static_cast<std::size_t>(j - scales.j_min)];
      }
      if (low) {
        res.removed_mass += c.weight(res.kept[row]);
      } else {
        next.push_back(res.kept[row]);
      }
    }
    if (next.size() == res.kept.size()) break;
    res.kept = std::move(next);
  }
  res.k_estimate = res.removed_mass / eps;
  return res;
}

Subset separated_net(const WeightedCloud& c, double delta, const std::optional<Subset>& within,
                     const Subset& seed) {
  if (!(delta > 0.0)) throw InputError("separated_net: delta must be positive");
  const int d = c.ambient_dim();
  using Key = GridIndex::Key;
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::uint64_t h = 1469598103934665603ULL;
      for (std::int64_t v : k) h = (h ^ static_cast<std::uint64_t>(v)) * 1099511628211ULL;
      return static_cast<std::size_t>(h);
    }
  };
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> cells;
  auto key_of = [&](const double* x) {
    Key k{};
    for (int i = 0; i < d; ++i) k[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::floor(x[i] / delta));
    return k;
  };
  const double delta2 = delta * delta;
  Subset net;
  auto try_add = [&](std::size_t p) {
    const double* x = c.point(p);
    const Key base = key_of(x);
    Key cur = base;
    std::array<int, kMaxDim> off{};
    off.fill(-1);
    while (true) {
      for (int i = 0; i < d; ++i) cur[static_cast<std::size_t>(i)] = base[static_cast<std::size_t>(i)] + off[static_cast<std::size_t>(i)];
      auto it = cells.find(cur);
      if (it != cells.end()) {
        for (std::size_t q : it->second) {
          if (squared_distance(x, c.point(q), d) <= delta2) return;
        }
      }
      int i = 0;
      for (; i < d; ++i) {
        if (off[static_cast<std::size_t>(i)] < 1) {
          ++off[static_cast<std::size_t>(i)];
          break;
        }
        off[static_cast<std::size_t>(i)] = -1;
      }
      if (i == d) break;
    }
    cells[base].push_back(p);
    net.push_back(p);
  };
  for (std::size_t p : seed) try_add(p);
  if (within) {
    for (std::size_t p : *within) try_add(p);
  } else {
    for (std::size_t p = 0; p < c.size(); ++p) try_add(p);
  }
  std::sort(net.begin(), net.end());
  net.erase(std::unique(net.begin(), net.end()), net.end());
  return net;
}

Pushforward pushforward_density(const WeightedCloud& c, const Subset& s, const Subspace& v, double bin) {
  if (!(bin >= c.delta_res())) throw InputError("pushforward_density: bin must be >= delta_res");
  if (v.ambient_dim() != c.ambient_dim()) throw InputError("pushforward_density: dimension mismatch");
  Pushforward out;
  out.bin = bin;
  const int k = v.dim();
  const Mat& frame = v.frame();
  std::vector<std::int64_t> key(static_cast<std::size_t>(k));
  for (std::size_t p : s) {
    const Eigen::Map<const Vec> x(c.point(p), c.ambient_dim());
    for (int i = 0; i < k; ++i) {
      key[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::floor(frame.col(i).dot(x) / bin));
    }
    out.bins[key] += c.weight(p);
    out.mass += c.weight(p);
  }
  const double cell = std::pow(bin, k);
  for (const auto& [key_, m] : out.bins) {
    out.l2_sq += m * m / cell;
    out.linf = std::max(out.linf, m / cell);
  }
  return out;
}

EnergyEstimate projection_energy(const WeightedCloud& c, const Subset& s, const Subspace& w, double kappa,
                                 std::size_t samples, double bin, std::uint64_t seed) {
  if (!(kappa > 0.0)) throw InputError("projection_energy: kappa must be positive");
  GrassmannSampler sampler{c.ambient_dim(), w.dim(), seed, w, kappa};
  const GammaDraw draw = sample_gamma(sampler, samples);
  EnergyEstimate out;
  out.acceptance_rate = draw.acceptance_rate;
  double sum = 0.0;
  for (const Subspace& v : draw.planes) {
    const double l2 = pushforward_density(c, s, v, bin).l2_sq;
    out.per_sample.push_back(l2);
    out.distances.push_back(grassmann_distance(v, w));
    sum += l2;
  }
  out.mean_l2_sq = sum / static_cast<double>(draw.planes.size());
  return out;
}

TripleCount triple_count(const WeightedCloud& c, const Subset& f_prime, const Subset& f_m, double kappa,
                         double delta, std::size_t samples, std::uint64_t seed) {
  if (!(delta >= 0.0)) throw InputError("triple_count: delta must be nonnegative");
  if (!std::includes(f_prime.begin(), f_prime.end(), f_m.begin(), f_m.end())) {
    throw InputError("triple_count: F^M must be contained in F'");
  }
  const int d = c.ambient_dim();
  const int n = c.intrinsic_dim();
  GrassmannSampler sampler{d, n, seed, Subspace::base_plane(d, n), kappa};
  const GammaDraw draw = sample_gamma(sampler, samples);
  const std::vector<char> in_m = subset_mask(c, f_m);
  const std::size_t count = f_prime.size();
  const double delta2 = delta * delta;
  double all_pairs = 0.0;
  double lower = 0.0;
  Mat proj(n, static_cast<Eigen::Index>(count));
  for (const Subspace& v : draw.planes) {
    for (std::size_t a = 0; a < count; ++a) {
      proj.col(static_cast<Eigen::Index>(a)) =
          v.frame().transpose() * Eigen::Map<const Vec>(c.point(f_prime[a]), d);
    }
    auto tally = [&](std::size_t a, std::size_t b) {
      if ((proj.col(static_cast<Eigen::Index>(a)) - proj.col(static_cast<Eigen::Index>(b))).squaredNorm() > delta2) return;
      all_pairs += 1.0;
      if (in_m[f_prime[a]]) lower += 1.0;
    };
    if (count <= 2000 || delta == 0.0) {
      for (std::size_t a = 0; a < count; ++a) {
        for (std::size_t b = 0; b < count; ++b) tally(a, b);
      }
      continue;
    }
    const GridIndex grid(proj, delta);
    std::array<double, kMaxDim> lo{};
    std::array<double, kMaxDim> hi{};
    for (std::size_t a = 0; a < count; ++a) {
      for (int i = 0; i < n; ++i) {
        lo[static_cast<std::size_t>(i)] = proj(i, static_cast<Eigen::Index>(a)) - delta;
        hi[static_cast<std::size_t>(i)] = proj(i, static_cast<Eigen::Index>(a)) + delta;
      }
      grid.for_each_in_box(lo.data(), hi.data(), [&](std::size_t b) { tally(a, b); });
    }
  }
  TripleCount out;
  out.samples = draw.planes.size();
  out.ball_measure = draw.acceptance_rate;
  const double scale = out.ball_measure / static_cast<double>(draw.planes.size());
  out.lhs_estimate = all_pairs * scale;
  out.lower_part = lower * scale;
  return out;
}

}  // namespace graphcarve
