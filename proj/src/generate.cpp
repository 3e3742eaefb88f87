#include "graphcarve/generate.hpp"

#include "graphcarve/error.hpp"

#include <cmath>
#include <random>

namespace graphcarve {

namespace {

// Piecewise-linear g on [lo, hi] with `pieces` equal pieces and slopes uniform in [-lip, lip].
struct PiecewiseLinear {
  double lo = 0.0;
  double width = 1.0;
  std::vector<double> slopes;
  std::vector<double> knots;  // value at the left end of each piece

  PiecewiseLinear(std::mt19937_64& rng, double lo_, double hi_, int pieces, double lip) : lo(lo_) {
    width = (hi_ - lo_) / pieces;
    std::uniform_real_distribution<double> slope(-lip, lip);
    double v = 0.0;
    for (int i = 0; i < pieces; ++i) {
      slopes.push_back(lip > 0.0 ? slope(rng) : 0.0);
      knots.push_back(v);
      v += slopes.back() * width;
    }
  }

  std::size_t piece(double x) const {
    const double f = std::floor((x - lo) / width);
    return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(slopes.size() - 1)));
  }
  double value(double x) const {
    const std::size_t i = piece(x);
    return knots[i] + slopes[i] * (x - lo - width * static_cast<double>(i));
  }
  double slope(double x) const { return slopes[piece(x)]; }
};

Vec random_unit(std::mt19937_64& rng, int k) {
  std::normal_distribution<double> normal;
  Vec v(k);
  do {
    for (int i = 0; i < k; ++i) v[i] = normal(rng);
  } while (v.norm() < 1e-9);
  return v.normalized();
}

struct Sheet {
  Vec u;  // base direction
  Vec v;  // value direction
  PiecewiseLinear g;
};

Sheet make_sheet(std::mt19937_64& rng, const GenerateParams& p) {
  Vec u = random_unit(rng, p.n);
  Vec v = random_unit(rng, p.d - p.n);
  const double reach = std::sqrt(static_cast<double>(p.n)) * std::max(std::abs(p.t_min), std::abs(p.t_max));
  return {u, v, PiecewiseLinear(rng, -reach, reach, p.pieces, p.lipschitz)};
}

void check_graph_params(const GenerateParams& p) {
  if (p.d < 2 || p.d > kMaxDim || p.n < 1 || p.n >= p.d) throw InputError("generate: need 1 <= n < d <= 8");
  if (p.count < 1) throw InputError("generate: count must be >= 1");
  if (!(p.t_max > p.t_min)) throw InputError("generate: need t_min < t_max");
  if (!(p.lipschitz >= 0.0)) throw InputError("generate: lipschitz must be nonnegative");
  if (p.pieces < 1) throw InputError("generate: pieces must be >= 1");
  const double total = std::pow(static_cast<double>(p.count), p.n);
  if (total > 5e6) throw InputError("generate: too many points");
}

// Base lattice t in [t_min, t_max)^n with spacing h; calls f(t) in lexicographic order.
template <class F>
void for_each_site(const GenerateParams& p, F&& f) {
  const double h = (p.t_max - p.t_min) / static_cast<double>(p.count);
  std::vector<std::size_t> idx(static_cast<std::size_t>(p.n), 0);
  Vec t(p.n);
  while (true) {
    for (int i = 0; i < p.n; ++i) t[i] = p.t_min + h * static_cast<double>(idx[static_cast<std::size_t>(i)]);
    f(t);
    int i = p.n - 1;
    for (; i >= 0; --i) {
      if (++idx[static_cast<std::size_t>(i)] < p.count) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
    if (i < 0) break;
  }
}

struct Builder {
  int d;
  std::vector<double> coords;
  std::vector<double> weights;

  void add(const Vec& x, double w) {
    coords.insert(coords.end(), x.data(), x.data() + x.size());
    weights.push_back(w);
  }
  WeightedCloud build(int n, double delta_res) const {
    const Eigen::Index count = static_cast<Eigen::Index>(weights.size());
    Mat pts = Eigen::Map<const Mat>(coords.data(), d, count);
    Vec w = Eigen::Map<const Vec>(weights.data(), count);
    return WeightedCloud(n, std::move(pts), std::move(w), delta_res);
  }
};

void add_sheet(Builder& b, const GenerateParams& p, const Sheet& s, double shift) {
  const double h = (p.t_max - p.t_min) / static_cast<double>(p.count);
  const double cell = std::pow(h, p.n);
  for_each_site(p, [&](const Vec& t) {
    const double x = t.dot(s.u);
    Vec point(p.d);
    point.head(p.n) = t;
    point.tail(p.d - p.n) = s.v * s.g.value(x);
    point[p.n] += shift;
    const double slope = s.g.slope(x);
    b.add(point, p.unit_weights ? 1.0 : cell * std::sqrt(1.0 + slope * slope));
  });
}

WeightedCloud four_corner(const GenerateParams& p) {
  if (p.depth < 1 || p.depth > 10) throw InputError("generate: cantor depth must lie in [1, 10]");
  std::vector<std::pair<double, double>> corners{{0.0, 0.0}};
  double side = 1.0;
  for (int level = 0; level < p.depth; ++level) {
    std::vector<std::pair<double, double>> next;
    const double step = 0.75 * side;
    for (const auto& [x, y] : corners) {
      for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) next.emplace_back(x + i * step, y + j * step);
      }
    }
    corners = std::move(next);
    side /= 4.0;
  }
  Builder b{2, {}, {}};
  const double w = p.unit_weights ? 1.0 : std::pow(4.0, -p.depth);
  for (const auto& [x, y] : corners) {
    Vec pt(2);
    pt << x + side / 2.0, y + side / 2.0;
    b.add(pt, w);
  }
  return b.build(1, 3.0 * side);
}

WeightedCloud hrycak_like(const GenerateParams& p) {
  if (p.levels < 1 || p.levels > 20) throw InputError("generate: levels must lie in [1, 20]");
  std::mt19937_64 rng(p.seed);
  std::bernoulli_distribution coin(0.5);
  // Level k contributes a zigzag of slope +-lip with period 2^-k over [t_min, t_max];
  // each dyadic interval of level k gets its own sign.
  std::vector<std::vector<int>> signs(static_cast<std::size_t>(p.levels));
  for (int k = 0; k < p.levels; ++k) {
    for (int i = 0; i < (1 << k); ++i) signs[static_cast<std::size_t>(k)].push_back(coin(rng) ? 1 : -1);
  }
  const double span = p.t_max - p.t_min;
  const double h = span / static_cast<double>(p.count);
  const double lip = p.lipschitz > 0.0 ? p.lipschitz : 0.3;
  Builder b{2, {}, {}};
  for (std::size_t i = 0; i < p.count; ++i) {
    const double t = p.t_min + h * static_cast<double>(i);
    const double s = (t - p.t_min) / span;
    double value = 0.0;
    double slope = 0.0;
    for (int k = 0; k < p.levels; ++k) {
      const double period = std::ldexp(1.0, -k);
      const double local = std::fmod(s, period) / period;  // in [0,1)
      const std::size_t cell = static_cast<std::size_t>(std::floor(s / period));
      const int sign = signs[static_cast<std::size_t>(k)][std::min(cell, signs[static_cast<std::size_t>(k)].size() - 1)];
      const double tent = local < 0.5 ? local : 1.0 - local;
      value += sign * lip * tent * period * span;
      slope += sign * lip * (local < 0.5 ? 1.0 : -1.0);
    }
    Vec pt(2);
    pt << t, value;
    b.add(pt, p.unit_weights ? 1.0 : h * std::sqrt(1.0 + slope * slope));
  }
  return b.build(1, h);
}

}  // namespace

WeightedCloud generate(const GenerateParams& p) {
  if (p.kind == "four_corner_cantor") return four_corner(p);
  if (p.kind == "hrycak_like") {
    if (p.count < 2) throw InputError("generate: count must be >= 2");
    return hrycak_like(p);
  }
  check_graph_params(p);
  const double h = (p.t_max - p.t_min) / static_cast<double>(p.count);
  std::mt19937_64 rng(p.seed);
  Builder b{p.d, {}, {}};
  if (p.kind == "lipschitz_graph") {
    add_sheet(b, p, make_sheet(rng, p), 0.0);
    return b.build(p.n, h);
  }
  if (p.kind == "union_of_graphs") {
    if (p.graphs < 1) throw InputError("generate: graphs must be >= 1");
    for (int k = 0; k < p.graphs; ++k) add_sheet(b, p, make_sheet(rng, p), p.offset * k);
    return b.build(p.n, h);
  }
  if (p.kind == "outlier_stacks") {
    const Sheet s = make_sheet(rng, p);
    add_sheet(b, p, s, 0.0);
    const double w = p.unit_weights ? 1.0 : std::pow(h, p.n);
    for (const Stack& st : p.stacks) {
      if (st.count < 1 || !(st.height > 0.0)) throw InputError("generate: stacks need count >= 1 and height > 0");
      Vec t = Vec::Zero(p.n);
      t[0] = st.site;
      const Vec base = s.v * s.g.value(t.dot(s.u));
      for (int k = 1; k <= st.count; ++k) {
        Vec pt(p.d);
        pt.head(p.n) = t;
        pt.tail(p.d - p.n) = base;
        pt[p.n] += st.height * k / st.count;
        b.add(pt, w);
      }
    }
    return b.build(p.n, h);
  }
  throw InputError("generate: unknown kind '" + p.kind + "'");
}

}  // namespace graphcarve
