#include "graphcarve/cloud.hpp"

#include "graphcarve/error.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace graphcarve {

GridIndex::GridIndex(const Mat& points, double cell) : d_(static_cast<int>(points.rows())), cell_(cell) {
  const std::size_t count = static_cast<std::size_t>(points.cols());
  std::vector<Key> point_keys(count);
  for (std::size_t p = 0; p < count; ++p) {
    Key k{};
    for (int i = 0; i < d_; ++i) k[static_cast<std::size_t>(i)] = coord(points(i, static_cast<Eigen::Index>(p)));
    point_keys[p] = k;
  }
  order_.resize(count);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return point_keys[a] < point_keys[b]; });
  for (std::size_t p = 0; p < count; ++p) {
    const Key& k = point_keys[order_[p]];
    if (keys_.empty() || keys_.back() != k) {
      lookup_.emplace(k, keys_.size());
      keys_.push_back(k);
      start_.push_back(p);
    }
  }
  start_.push_back(count);
}

std::vector<std::size_t> GridIndex::cell_members(const double* x) const {
  Key k{};
  for (int i = 0; i < d_; ++i) k[static_cast<std::size_t>(i)] = coord(x[i]);
  auto it = lookup_.find(k);
  if (it == lookup_.end()) return {};
  return {order_.begin() + static_cast<std::ptrdiff_t>(start_[it->second]),
          order_.begin() + static_cast<std::ptrdiff_t>(start_[it->second + 1])};
}

double squared_distance(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

namespace {

void validate(int n, const Mat& points, const Vec& weights, double delta_res) {
  const int d = static_cast<int>(points.rows());
  if (d < 2 || d > kMaxDim) throw InputError("cloud: ambient dimension outside [2, " + std::to_string(kMaxDim) + "]");
  if (n < 1 || n >= d) throw InputError("cloud: need 1 <= n < d");
  if (weights.size() != points.cols()) throw InputError("cloud: weight count does not match point count");
  if (!(delta_res > 0.0) || !std::isfinite(delta_res)) throw InputError("cloud: delta_res must be positive");
  if (!points.allFinite() || !weights.allFinite()) throw InputError("cloud: non-finite coordinates or weights");
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0)) throw InputError("cloud: weight of point " + std::to_string(i) + " is not positive");
  }
}

double exact_or_box_diameter(const Mat& points) {
  const Eigen::Index count = points.cols();
  if (count < 2) return 0.0;
  if (count > 20000) return (points.rowwise().maxCoeff() - points.rowwise().minCoeff()).norm();
  const int d = static_cast<int>(points.rows());
  double best = 0.0;
  for (Eigen::Index a = 0; a < count; ++a) {
    for (Eigen::Index b = a + 1; b < count; ++b) {
      best = std::max(best, squared_distance(points.col(a).data(), points.col(b).data(), d));
    }
  }
  return std::sqrt(best);
}

}  // namespace

WeightedCloud::WeightedCloud(int n, Mat points, Vec weights, double delta_res)
    : n_(n), points_(std::move(points)), weights_(std::move(weights)), delta_res_(delta_res) {
  validate(n_, points_, weights_, delta_res_);
  total_mass_ = weights_.sum();
  grid_ = GridIndex(points_, delta_res_);
  const double guard = delta_res_ / 100.0;
  const int d = ambient_dim();
  std::array<double, kMaxDim> lo{};
  std::array<double, kMaxDim> hi{};
  for (std::size_t p = 0; p < size(); ++p) {
    for (int i = 0; i < d; ++i) {
      lo[static_cast<std::size_t>(i)] = point(p)[i] - guard;
      hi[static_cast<std::size_t>(i)] = point(p)[i] + guard;
    }
    grid_.for_each_in_box(lo.data(), hi.data(), [&](std::size_t q) {
      if (q > p && squared_distance(point(p), point(q), d) < guard * guard) {
        throw InputError("cloud: points " + std::to_string(p) + " and " + std::to_string(q) +
                         " are closer than delta_res/100");
      }
    });
  }
  diameter_ = exact_or_box_diameter(points_);
}

WeightedCloud WeightedCloud::merged(int n, const Mat& points, const Vec& weights, double delta_res) {
  validate(n, points, weights, delta_res);
  const int d = static_cast<int>(points.rows());
  const double guard = delta_res / 100.0;
  const GridIndex grid(points, delta_res);
  std::vector<std::size_t> owner(static_cast<std::size_t>(points.cols()));
  std::vector<std::size_t> kept;
  std::array<double, kMaxDim> lo{};
  std::array<double, kMaxDim> hi{};
  for (std::size_t p = 0; p < owner.size(); ++p) {
    owner[p] = p;
    for (int i = 0; i < d; ++i) {
      lo[static_cast<std::size_t>(i)] = points(i, static_cast<Eigen::Index>(p)) - guard;
      hi[static_cast<std::size_t>(i)] = points(i, static_cast<Eigen::Index>(p)) + guard;
    }
    std::size_t best = p;
    grid.for_each_in_box(lo.data(), hi.data(), [&](std::size_t q) {
      if (q < p && owner[q] == q && q < best &&
          squared_distance(points.col(static_cast<Eigen::Index>(p)).data(),
                           points.col(static_cast<Eigen::Index>(q)).data(), d) < guard * guard) {
        best = q;
      }
    });
    owner[p] = best;
    if (best == p) kept.push_back(p);
  }
  Mat out_points(d, static_cast<Eigen::Index>(kept.size()));
  Vec out_weights = Vec::Zero(static_cast<Eigen::Index>(kept.size()));
  std::vector<std::size_t> slot(owner.size(), 0);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    slot[kept[k]] = k;
    out_points.col(static_cast<Eigen::Index>(k)) = points.col(static_cast<Eigen::Index>(kept[k]));
  }
  for (std::size_t p = 0; p < owner.size(); ++p) {
    out_weights[static_cast<Eigen::Index>(slot[owner[p]])] += weights[static_cast<Eigen::Index>(p)];
  }
  return WeightedCloud(n, std::move(out_points), std::move(out_weights), delta_res);
}

Subset all_points(const WeightedCloud& c) {
  Subset s(c.size());
  std::iota(s.begin(), s.end(), std::size_t{0});
  return s;
}

double subset_mass(const WeightedCloud& c, const Subset& s) {
  double m = 0.0;
  for (std::size_t i : s) m += c.weight(i);
  return m;
}

std::vector<char> subset_mask(const WeightedCloud& c, const Subset& s) {
  std::vector<char> mask(c.size(), 0);
  for (std::size_t i : s) mask[i] = 1;
  return mask;
}

Subset subset_difference(const Subset& a, const Subset& b) {
  Subset out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

Subset subset_union(const Subset& a, const Subset& b) {
  Subset out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

Subset subset_intersection(const Subset& a, const Subset& b) {
  Subset out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

Subset ball_query(const WeightedCloud& c, const double* center, double radius, const std::vector<char>* mask) {
  const int d = c.ambient_dim();
  std::array<double, kMaxDim> lo{};
  std::array<double, kMaxDim> hi{};
  for (int i = 0; i < d; ++i) {
    lo[static_cast<std::size_t>(i)] = center[i] - radius;
    hi[static_cast<std::size_t>(i)] = center[i] + radius;
  }
  const double r2 = radius * radius;
  Subset out;
  c.grid().for_each_in_box(lo.data(), hi.data(), [&](std::size_t q) {
    if (mask && !(*mask)[q]) return;
    if (squared_distance(center, c.point(q), d) <= r2) out.push_back(q);
  });
  std::sort(out.begin(), out.end());
  return out;
}

Subset ball_query_oracle(const WeightedCloud& c, const double* center, double radius,
                         const std::vector<char>* mask) {
  const double r2 = radius * radius;
  Subset out;
  for (std::size_t q = 0; q < c.size(); ++q) {
    if (mask && !(*mask)[q]) continue;
    if (squared_distance(center, c.point(q), c.ambient_dim()) <= r2) out.push_back(q);
  }
  return out;
}

ScaleRange density_scales(const WeightedCloud& c) {
  return ScaleRange::within(c.delta_res(), std::max(c.diameter(), c.delta_res()));
}

}  // namespace graphcarve
