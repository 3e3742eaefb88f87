#pragma once

#include "graphcarve/geom.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

namespace graphcarve {

/// Sorted indices into a WeightedCloud.
using Subset = std::vector<std::size_t>;

/// Uniform hashed grid over the columns of a d x N matrix.
class GridIndex {
 public:
  using Key = std::array<std::int64_t, kMaxDim>;

  GridIndex() = default;
  GridIndex(const Mat& points, double cell);

  double cell() const { return cell_; }
  std::size_t occupied_cells() const { return keys_.size(); }

  /// Calls f(index) for every point whose cell meets the box [lo, hi]. Callers filter
  /// by exact geometry; the grid only guarantees no point inside the box is skipped.
  template <class F>
  void for_each_in_box(const double* lo, const double* hi, F&& f) const;

  /// Indices stored in the cell containing `x` (empty if unoccupied).
  std::vector<std::size_t> cell_members(const double* x) const;

 private:
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::uint64_t h = 1469598103934665603ULL;
      for (std::int64_t v : k) h = (h ^ static_cast<std::uint64_t>(v)) * 1099511628211ULL;
      return static_cast<std::size_t>(h);
    }
  };

  std::int64_t coord(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
  template <class F>
  void visit_cell(std::size_t c, F& f) const {
    for (std::size_t p = start_[c]; p < start_[c + 1]; ++p) f(order_[p]);
  }

  int d_ = 0;
  double cell_ = 1.0;
  std::vector<Key> keys_;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> order_;
  std::unordered_map<Key, std::size_t, KeyHash> lookup_;
};

template <class F>
void GridIndex::for_each_in_box(const double* lo, const double* hi, F&& f) const {
  Key clo{};
  Key chi{};
  double box_cells = 1.0;
  for (int i = 0; i < d_; ++i) {
    clo[static_cast<std::size_t>(i)] = coord(lo[i]);
    chi[static_cast<std::size_t>(i)] = coord(hi[i]);
    if (chi[static_cast<std::size_t>(i)] < clo[static_cast<std::size_t>(i)]) return;
    box_cells *= static_cast<double>(chi[static_cast<std::size_t>(i)] - clo[static_cast<std::size_t>(i)] + 1);
  }
  if (box_cells > static_cast<double>(keys_.size())) {
    for (std::size_t c = 0; c < keys_.size(); ++c) {
      bool inside = true;
      for (int i = 0; i < d_ && inside; ++i) {
        const std::int64_t v = keys_[c][static_cast<std::size_t>(i)];
        inside = v >= clo[static_cast<std::size_t>(i)] && v <= chi[static_cast<std::size_t>(i)];
      }
      if (inside) visit_cell(c, f);
    }
    return;
  }
  Key cur = clo;
  while (true) {
    auto it = lookup_.find(cur);
    if (it != lookup_.end()) visit_cell(it->second, f);
    int i = 0;
    for (; i < d_; ++i) {
      auto& v = cur[static_cast<std::size_t>(i)];
      if (v < chi[static_cast<std::size_t>(i)]) {
        ++v;
        break;
      }
      v = clo[static_cast<std::size_t>(i)];
    }
    if (i == d_) return;
  }
}

/// Finite weighted point set standing in for H^n restricted to E, at resolution delta_res.
class WeightedCloud {
 public:
  /// `points` is d x N. Throws InputError on non-positive weights, non-finite input, or
  /// two points closer than delta_res / 100.
  WeightedCloud(int n, Mat points, Vec weights, double delta_res);

  /// Like the constructor, but points closer than delta_res / 100 to an earlier point are
  /// folded into it and their weights added.
  static WeightedCloud merged(int n, const Mat& points, const Vec& weights, double delta_res);

  int ambient_dim() const { return static_cast<int>(points_.rows()); }
  int intrinsic_dim() const { return n_; }
  std::size_t size() const { return static_cast<std::size_t>(points_.cols()); }
  bool empty() const { return size() == 0; }
  const Mat& points() const { return points_; }
  const double* point(std::size_t i) const { return points_.col(static_cast<Eigen::Index>(i)).data(); }
  Vec point_vec(std::size_t i) const { return points_.col(static_cast<Eigen::Index>(i)); }
  double weight(std::size_t i) const { return weights_[static_cast<Eigen::Index>(i)]; }
  const Vec& weights() const { return weights_; }
  double delta_res() const { return delta_res_; }
  double total_mass() const { return total_mass_; }
  /// Exact for clouds up to 20000 points, bounding-box diagonal beyond that.
  double diameter() const { return diameter_; }
  const GridIndex& grid() const { return grid_; }

 private:
  int n_;
  Mat points_;
  Vec weights_;
  double delta_res_;
  double total_mass_ = 0.0;
  double diameter_ = 0.0;
  GridIndex grid_;
};

Subset all_points(const WeightedCloud& c);
double subset_mass(const WeightedCloud& c, const Subset& s);
std::vector<char> subset_mask(const WeightedCloud& c, const Subset& s);
Subset subset_difference(const Subset& a, const Subset& b);
Subset subset_union(const Subset& a, const Subset& b);
Subset subset_intersection(const Subset& a, const Subset& b);

double squared_distance(const double* a, const double* b, int d);

/// Sorted indices with |y - center| <= radius, restricted to mask when given.
Subset ball_query(const WeightedCloud& c, const double* center, double radius,
                  const std::vector<char>* mask = nullptr);
Subset ball_query_oracle(const WeightedCloud& c, const double* center, double radius,
                         const std::vector<char>* mask = nullptr);

/// Closed dyadic scales [delta_res, diameter] (at least one scale).
ScaleRange density_scales(const WeightedCloud& c);

/// m(x, j) = mass(subset cap B(x, 2^-j)) for x in subset, j in scales.
struct DensityProfile {
  ScaleRange scales;
  Subset points;
  std::vector<double> mass;  // points.size() x scales.size(), row-major

  double at(std::size_t row, int j) const {
    return mass[row * static_cast<std::size_t>(scales.size()) + static_cast<std::size_t>(j - scales.j_min)];
  }
};

DensityProfile density_profile(const WeightedCloud& c, const Subset& s, const ScaleRange& scales);

struct AdrViolation {
  std::size_t point;
  int j;
  double ratio;
};

struct AdrReport {
  double c1_hat = 0.0;
  double c2_hat = 0.0;
  ScaleRange scales;
  std::vector<AdrViolation> violations;
};

/// Ratios m(x, r) / r^n over the subset and scales; violations against [band_lo, band_hi].
AdrReport adr_check(const WeightedCloud& c, const Subset& s, const ScaleRange& scales,
                    std::optional<std::pair<double, double>> band = std::nullopt);

struct PruneResult {
  Subset kept;
  double removed_mass = 0.0;
  /// removed_mass / eps, the empirical constant of the covering lemma.
  double k_estimate = 0.0;
  int sweeps = 0;
};

/// Repeatedly drops x with m(x, r) <= eps r^n for some scale until nothing changes.
PruneResult prune_low_density(const WeightedCloud& c, const Subset& s, double eps, const ScaleRange& scales);

/// Greedy maximal delta-separated subset of `within` (all points if empty) in index
/// order, after first accepting the points of `seed` in their own order.
Subset separated_net(const WeightedCloud& c, double delta, const std::optional<Subset>& within = std::nullopt,
                     const Subset& seed = {});

struct Pushforward {
  std::map<std::vector<std::int64_t>, double> bins;  // bin index -> mass
  double bin = 0.0;
  double l2_sq = 0.0;
  double linf = 0.0;
  double mass = 0.0;
};

Pushforward pushforward_density(const WeightedCloud& c, const Subset& s, const Subspace& v, double bin);

struct EnergyEstimate {
  double mean_l2_sq = 0.0;
  std::vector<double> per_sample;
  std::vector<double> distances;  // dist(V, W) for each sample
  double acceptance_rate = 0.0;
};

/// Mean of pushforward l2_sq over V ~ gamma restricted to B(W, kappa).
EnergyEstimate projection_energy(const WeightedCloud& c, const Subset& s, const Subspace& w, double kappa,
                                 std::size_t samples, double bin, std::uint64_t seed);

struct TripleCount {
  /// Sum over ordered pairs x, y in F' of gamma(B_{x-y} cap B(R^n, kappa)).
  double lhs_estimate = 0.0;
  /// Same sum restricted to x in F^M.
  double lower_part = 0.0;
  double ball_measure = 0.0;
  std::size_t samples = 0;
};

TripleCount triple_count(const WeightedCloud& c, const Subset& f_prime, const Subset& f_m, double kappa,
                         double delta, std::size_t samples, std::uint64_t seed);

}  // namespace graphcarve
