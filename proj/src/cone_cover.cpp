#include "graphcarve/cone_cover.hpp"

#include "graphcarve/cloud.hpp"
#include "graphcarve/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace graphcarve {

namespace {

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43};

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

double sphere_area(int m) {  // area of S^{m-1} in R^m
  return 2.0 * std::pow(std::numbers::pi, m / 2.0) / std::tgamma(m / 2.0);
}

double ball_volume(int m, double r) {
  return std::pow(std::numbers::pi, m / 2.0) * std::pow(r, m) / std::tgamma(m / 2.0 + 1.0);
}

// Source of uniforms in (0,1): either a Halton point or a seeded generator.
class Uniforms {
 public:
  explicit Uniforms(std::mt19937_64* rng) : rng_(rng) {}
  explicit Uniforms(std::uint64_t halton_index) : index_(halton_index) {}

  double next() {
    if (rng_) {
      double u;
      do u = std::uniform_real_distribution<double>(0.0, 1.0)(*rng_);
      while (u <= 0.0);
      return u;
    }
    return radical_inverse(index_, kPrimes[dim_++ % 14]);
  }

  void gaussians(int count, double* out) {
    for (int i = 0; i < count; i += 2) {
      const double r = std::sqrt(-2.0 * std::log(next()));
      const double t = 2.0 * std::numbers::pi * next();
      out[i] = r * std::cos(t);
      if (i + 1 < count) out[i + 1] = r * std::sin(t);
    }
  }

 private:
  std::mt19937_64* rng_ = nullptr;
  std::uint64_t index_ = 0;
  int dim_ = 0;
};

// normalize(v + p): v a unit vector in V, p in V^perp with |p| <= beta (= beta when on_boundary).
Vec region_point(Uniforms& u, const Mat& frame, const Mat& complement, double beta, bool on_boundary) {
  const int k = static_cast<int>(frame.cols());
  const int c = static_cast<int>(complement.cols());
  std::array<double, kMaxDim> g{};
  Vec v;
  do {
    u.gaussians(k, g.data());
    v = frame * Eigen::Map<Vec>(g.data(), k);
  } while (v.norm() < 1e-300);
  v.normalize();
  u.gaussians(c, g.data());
  Vec p = complement * Eigen::Map<Vec>(g.data(), c);
  const double pn = p.norm();
  const double radius = on_boundary ? beta : beta * std::pow(u.next(), 1.0 / c);
  if (pn > 0.0) p *= radius / pn;
  return (v + p).normalized();
}

// Random member of X+(0, w, a) cap S.
Vec cap_point(std::mt19937_64& rng, const Vec& w, double a, bool on_boundary) {
  Uniforms u(&rng);
  const int d = static_cast<int>(w.size());
  std::array<double, kMaxDim> g{};
  u.gaussians(d, g.data());
  Vec q = Eigen::Map<Vec>(g.data(), d);
  q -= w.dot(q) * w;
  const double beta = a / std::sqrt(1.0 - std::min(a * a, 0.999999));
  const double radius = on_boundary ? beta : beta * std::pow(u.next(), 1.0 / (d - 1));
  const double qn = q.norm();
  if (qn > 0.0) q *= radius / qn;
  return (w + q).normalized();
}

}  // namespace

DirectionCover build_cover(const Subspace& v, double alpha, double s, const CoverOptions& opt) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("build_cover: alpha must lie in (0,1)");
  if (!(s > 0.0 && s <= 1.0)) throw InputError("build_cover: s must lie in (0,1]");
  const int d = v.ambient_dim();
  const int k = v.dim();
  const Mat complement = v.orthogonal_complement().frame();
  const double beta = alpha / std::sqrt(1.0 - alpha * alpha);
  const double as = alpha * s;

  const double area = sphere_area(k) * ball_volume(d - k, alpha);
  const double want = 4.0 * area * std::pow(4.0 / as, d - 1) * opt.oversample;
  const std::size_t count = static_cast<std::size_t>(std::clamp(std::ceil(want), 1e4, 4e6));

  DirectionCover cover{v, alpha, s, {}, 0.0, 0.0, count, {}};

  // Greedy net with separation > alpha s / 2, neighbours found through a hashed grid.
  const double sep = as / 2.0;
  const double sep2 = sep * sep;
  std::unordered_map<GridIndex::Key, std::vector<std::size_t>, decltype([](const GridIndex::Key& key) {
                       std::uint64_t h = 1469598103934665603ULL;
                       for (std::int64_t x : key) h = (h ^ static_cast<std::uint64_t>(x)) * 1099511628211ULL;
                       return static_cast<std::size_t>(h);
                     })>
      cells;
  auto key_of = [&](const Vec& x) {
    GridIndex::Key key{};
    for (int i = 0; i < d; ++i) key[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::floor(x[i] / sep));
    return key;
  };
  for (std::size_t i = 1; i <= count; ++i) {
    Uniforms u(static_cast<std::uint64_t>(i));
    const Vec x = region_point(u, v.frame(), complement, beta, false);
    const GridIndex::Key base = key_of(x);
    bool near = false;
    std::array<int, kMaxDim> off{};
    off.fill(-1);
    while (!near) {
      GridIndex::Key cur = base;
      for (int t = 0; t < d; ++t) cur[static_cast<std::size_t>(t)] += off[static_cast<std::size_t>(t)];
      if (auto it = cells.find(cur); it != cells.end()) {
        for (std::size_t j : it->second) {
          if ((cover.directions[j] - x).squaredNorm() <= sep2) {
            near = true;
            break;
          }
        }
      }
      int t = 0;
      for (; t < d; ++t) {
        if (off[static_cast<std::size_t>(t)] < 1) {
          ++off[static_cast<std::size_t>(t)];
          break;
        }
        off[static_cast<std::size_t>(t)] = -1;
      }
      if (t == d) break;
    }
    if (near) continue;
    cells[base].push_back(cover.directions.size());
    cover.directions.push_back(x);
  }
  const std::size_t m = cover.directions.size();
  cover.c_cover = static_cast<double>(m) * std::pow(as, d - 1);

  Mat net(d, static_cast<Eigen::Index>(m));
  std::vector<ConeKernel> narrow;
  std::vector<ConeKernel> wide;
  for (std::size_t j = 0; j < m; ++j) {
    net.col(static_cast<Eigen::Index>(j)) = cover.directions[j];
    narrow.push_back(ConeKernel::one_sided(cover.directions[j], as));
    wide.push_back(ConeKernel::one_sided(cover.directions[j], alpha));
  }
  const GridIndex grid(net, sep);
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> pick(0, m - 1);
  auto describe = [](const Vec& z) {
    std::string out = "(";
    for (Eigen::Index i = 0; i < z.size(); ++i) out += (i ? ", " : "") + std::to_string(z[i]);
    return out + ")";
  };

  // (a) X(0,V,alpha) cap S is inside the union of X+(0, w_j, alpha s).
  const double reach = std::sqrt(2.0) * as * (1.0 + 1e-9);
  std::array<double, kMaxDim> lo{};
  std::array<double, kMaxDim> hi{};
  for (std::size_t t = 0; t < opt.check_samples; ++t) {
    Uniforms u(&rng);
    const Vec z = region_point(u, v.frame(), complement, beta, t % 4 == 0);
    for (int i = 0; i < d; ++i) {
      lo[static_cast<std::size_t>(i)] = z[i] - reach;
      hi[static_cast<std::size_t>(i)] = z[i] + reach;
    }
    bool covered = false;
    grid.for_each_in_box(lo.data(), hi.data(), [&](std::size_t j) {
      if (!covered) covered = narrow[j].admits(z.data(), z.squaredNorm(), Openness::Closed);
    });
    if (!covered) throw InvariantViolation("build_cover: inclusion (a) fails at direction " + describe(z));
  }
  cover.certificate.samples_a = opt.check_samples;

  // (b) X+(0, w_j, alpha s) inside X+(0, w_j, alpha); the identity when s = 1.
  for (std::size_t t = 0; s < 1.0 && t < opt.check_samples; ++t) {
    const std::size_t j = pick(rng);
    const Vec z = cap_point(rng, cover.directions[j], as, t % 4 == 0);
    if (!wide[j].admits(z.data(), z.squaredNorm(), Openness::Closed)) {
      throw InvariantViolation("build_cover: inclusion (b) fails at direction " + describe(z));
    }
  }
  cover.certificate.samples_b = opt.check_samples;

  // (c) the union of X+(0, w_j, alpha) cap S lies in X(0, V, b alpha), b = b' + 1.
  std::vector<Vec> probes;
  probes.reserve(opt.check_samples);
  for (std::size_t t = 0; t < opt.check_samples; ++t) {
    const std::size_t j = pick(rng);
    const Vec z = cap_point(rng, cover.directions[j], alpha, t % 4 == 0);
    cover.certificate.b_prime = std::max(cover.certificate.b_prime, (z - cover.directions[j]).norm() / alpha);
    probes.push_back(z);
  }
  cover.b_used = cover.certificate.b_prime + 1.0;
  for (const Vec& z : probes) {
    const double ratio = (complement.transpose() * z).norm() / alpha;
    cover.certificate.max_perp_ratio = std::max(cover.certificate.max_perp_ratio, ratio);
    if (ratio > cover.b_used) throw InvariantViolation("build_cover: inclusion (c) fails at direction " + describe(z));
  }
  cover.certificate.samples_c = opt.check_samples;
  cover.certificate.passed = true;
  return cover;
}

std::string cover_to_json(const DirectionCover& cover) {
  nlohmann::json j;
  j["schema"] = "graphcarve/1";
  j["alpha"] = cover.alpha;
  j["s"] = cover.s;
  j["b_used"] = cover.b_used;
  j["c_cover"] = cover.c_cover;
  j["net_samples"] = cover.net_samples;
  nlohmann::json frame = nlohmann::json::array();
  for (Eigen::Index c = 0; c < cover.v.frame().cols(); ++c) {
    frame.push_back(std::vector<double>(cover.v.frame().col(c).data(),
                                        cover.v.frame().col(c).data() + cover.v.ambient_dim()));
  }
  j["V"] = frame;
  nlohmann::json dirs = nlohmann::json::array();
  for (const Vec& w : cover.directions) dirs.push_back(std::vector<double>(w.data(), w.data() + w.size()));
  j["directions"] = dirs;
  j["certificate"] = {{"samples_a", cover.certificate.samples_a},
                      {"samples_b", cover.certificate.samples_b},
                      {"samples_c", cover.certificate.samples_c},
                      {"b_prime", cover.certificate.b_prime},
                      {"max_perp_ratio", cover.certificate.max_perp_ratio},
                      {"passed", cover.certificate.passed}};
  return j.dump(2);
}

DirectionCover cover_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("cover json: ") + e.what());
  }
  try {
    const auto frame = j.at("V").get<std::vector<std::vector<double>>>();
    if (frame.empty()) throw InputError("cover json: empty frame");
    const int d = static_cast<int>(frame[0].size());
    Mat m(d, static_cast<Eigen::Index>(frame.size()));
    for (std::size_t c = 0; c < frame.size(); ++c) {
      if (static_cast<int>(frame[c].size()) != d) throw InputError("cover json: ragged frame");
      for (int r = 0; r < d; ++r) m(r, static_cast<Eigen::Index>(c)) = frame[c][static_cast<std::size_t>(r)];
    }
    DirectionCover cover{Subspace(m), j.at("alpha").get<double>(), j.at("s").get<double>(), {},
                         j.at("b_used").get<double>(), j.value("c_cover", 0.0), j.value("net_samples", std::size_t{0}),
                         {}};
    for (const auto& w : j.at("directions").get<std::vector<std::vector<double>>>()) {
      if (static_cast<int>(w.size()) != d) throw InputError("cover json: direction dimension mismatch");
      cover.directions.push_back(Eigen::Map<const Vec>(w.data(), d));
    }
    if (j.contains("certificate")) {
      const auto& c = j["certificate"];
      cover.certificate.samples_a = c.value("samples_a", std::size_t{0});
      cover.certificate.samples_b = c.value("samples_b", std::size_t{0});
      cover.certificate.samples_c = c.value("samples_c", std::size_t{0});
      cover.certificate.b_prime = c.value("b_prime", 0.0);
      cover.certificate.max_perp_ratio = c.value("max_perp_ratio", 0.0);
      cover.certificate.passed = c.value("passed", false);
    }
    return cover;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("cover json: ") + e.what());
  }
}

}  // namespace graphcarve
