#include "graphcarve/refinery.hpp"

#include "graphcarve/error.hpp"
#include "graphcarve/grassmann.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace graphcarve {

std::string to_string(StopReason r) { return r == StopReason::Stop1 ? "stop_1" : "stop_2"; }

std::string to_string(ScaleChoice c) {
  switch (c) {
    case ScaleChoice::Largest: return "largest";
    case ScaleChoice::Smallest: return "smallest";
    case ScaleChoice::Random: return "random";
  }
  return "largest";
}

ScaleChoice scale_choice_from_string(const std::string& s) {
  if (s == "largest") return ScaleChoice::Largest;
  if (s == "smallest") return ScaleChoice::Smallest;
  if (s == "random") return ScaleChoice::Random;
  throw InputError("unknown scale choice '" + s + "'");
}

namespace {

std::string fmt_point(const WeightedCloud& c, std::size_t i) {
  std::string out = "#" + std::to_string(i) + " (";
  for (int k = 0; k < c.ambient_dim(); ++k) out += (k ? ", " : "") + std::to_string(c.point(i)[k]);
  return out + ")";
}

// Mutable algorithm state: F^k as a mask plus per-vertex hit counts at aperture alpha/2.
class Refiner {
 public:
  Refiner(const WeightedCloud& c, const Subset& f, const Vec& w, double alpha, int m, const RefineConfig& cfg,
          const ScaleRange& range, double delta)
      : c_(c),
        f_(f),
        w_(w),
        alpha_(alpha),
        m_(m),
        cfg_(cfg),
        range_(range),
        delta_(delta),
        width_(static_cast<std::size_t>(range.size())),
        half_(ConeKernel::one_sided(w, alpha / 2.0)),
        full_(ConeKernel::one_sided(w, alpha)),
        in_f_(subset_mask(c, f)),
        hits_(c.size() * width_, 0),
        counts_(c.size(), 0),
        rng_(derive_seed(cfg.seed, 0x7265)) {}

  RefinementOutcome run();

 private:
  int& hit(std::size_t x, int j) { return hits_[x * width_ + static_cast<std::size_t>(j - range_.j_min)]; }
  bool in_fkm(std::size_t x) const { return in_f_[x] && counts_[x] == m_; }
  double wcoord(std::size_t x) const { return Eigen::Map<const Vec>(c_.point(x), c_.ambient_dim()).dot(w_); }

  void init_counts();
  void remove(const Subset& doomed);
  bool is_bad(std::size_t x) const;
  Subset current_fkm() const;
  int choose_scale(std::size_t x);
  std::size_t witness(std::size_t x, int j) const;
  bool placement_ok(std::size_t xk, std::size_t zk, int jk, double r, const Subset& big_ball);
  void check_invariants(const IterationRecord& rec, const Subset& s_k, const Subset& d_k, const Subset& b_k);

  const WeightedCloud& c_;
  const Subset& f_;
  Vec w_;
  double alpha_;
  int m_;
  const RefineConfig& cfg_;
  ScaleRange range_;
  double delta_;
  std::size_t width_;
  ConeKernel half_;
  ConeKernel full_;
  std::vector<char> in_f_;
  std::vector<int> hits_;
  std::vector<int> counts_;
  std::mt19937_64 rng_;
  RefinementOutcome out_;
  std::vector<char> in_saved_;
  double last_w_ = -std::numeric_limits<double>::infinity();
};

void Refiner::init_counts() {
  for (std::size_t x : f_) {
    scan_cone(c_, in_f_, c_.point(x), half_, range_, Openness::Closed, false, [&](std::size_t q, int j) {
      if (q != x && hit(x, j)++ == 0) ++counts_[x];
    });
  }
}

void Refiner::remove(const Subset& doomed) {
  const ConeKernel back = half_.reversed();
  for (std::size_t y : doomed) {
    // x sees y iff y - x lies in X+(w); scanning the reversed cone from y finds every such x.
    scan_cone(c_, in_f_, c_.point(y), back, range_, Openness::Closed, false, [&](std::size_t x, int j) {
      if (x != y && --hit(x, j) == 0) --counts_[x];
    });
  }
  for (std::size_t y : doomed) in_f_[y] = 0;
}

Subset Refiner::current_fkm() const {
  Subset out;
  for (std::size_t x : f_) {
    if (in_fkm(x)) out.push_back(x);
  }
  return out;
}

bool Refiner::is_bad(std::size_t x) const {
  if (!in_fkm(x)) return false;
  const int n = c_.intrinsic_dim();
  const int d = c_.ambient_dim();
  std::vector<std::pair<double, double>> near;  // (distance, weight)
  for (std::size_t q : ball_query(c_, c_.point(x), 1.0, &in_f_)) {
    if (!in_fkm(q)) continue;
    near.emplace_back(std::sqrt(squared_distance(c_.point(x), c_.point(q), d)), c_.weight(q));
  }
  std::sort(near.begin(), near.end());
  // mass(B(x, r)) is a right-continuous step function; on [d_i, d_{i+1}) it equals the
  // cumulative mass M_i, so the density condition on [delta, 1] reduces to
  // M_i >= eps * min(d_{i+1}, 1)^n on every step that meets [delta, 1].
  double acc = 0.0;
  for (std::size_t i = 0; i < near.size(); ++i) {
    acc += near[i].second;
    if (i + 1 < near.size() && near[i + 1].first == near[i].first) continue;
    const double next = i + 1 < near.size() ? near[i + 1].first : std::numeric_limits<double>::infinity();
    if (next <= delta_) continue;
    if (acc < out_.eps * std::pow(std::min(next, 1.0), n)) return false;
    if (next > 1.0) break;
  }
  return true;
}

int Refiner::choose_scale(std::size_t x) {
  std::vector<int> scales;
  for (int j = range_.j_min; j <= range_.j_max; ++j) {
    if (hit(x, j) > 0) scales.push_back(j);
  }
  if (scales.empty()) throw InvariantViolation("refine_once: bad point without visitation scales");
  switch (cfg_.scale_choice) {
    case ScaleChoice::Largest: return scales.front();
    case ScaleChoice::Smallest: return scales.back();
    case ScaleChoice::Random:
      return scales[std::uniform_int_distribution<std::size_t>(0, scales.size() - 1)(rng_)];
  }
  return scales.front();
}

std::size_t Refiner::witness(std::size_t x, int j) const {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  scan_cone(c_, in_f_, c_.point(x), half_, ScaleRange{j, j}, Openness::Closed, false, [&](std::size_t q, int) {
    if (q != x) best = std::min(best, q);
  });
  if (best == std::numeric_limits<std::size_t>::max()) throw InvariantViolation("refine_once: missing witness");
  return best;
}

// z_k must lie in one of the closed cones X+(x, w, alpha) at scales j_k - 1, j_k, j_k + 1
// for every x of B(x_k, 100 r): checked on B^k itself, the axis extremes, and random points.
bool Refiner::placement_ok(std::size_t xk, std::size_t zk, int jk, double r, const Subset& big_ball) {
  const int d = c_.ambient_dim();
  const Eigen::Map<const Vec> z(c_.point(zk), d);
  const Eigen::Map<const Vec> center(c_.point(xk), d);
  const ScaleRange near{jk - 1, jk + 1};
  auto sees = [&](const Vec& x) {
    std::array<double, kMaxDim> delta{};
    double dist2 = 0.0;
    for (int i = 0; i < d; ++i) {
      delta[static_cast<std::size_t>(i)] = z[i] - x[i];
      dist2 += delta[static_cast<std::size_t>(i)] * delta[static_cast<std::size_t>(i)];
    }
    int js[2];
    return annulus_scales(dist2, near, js) > 0 && full_.admits(delta.data(), dist2, Openness::Closed);
  };
  for (std::size_t b : big_ball) {
    if (!sees(c_.point_vec(b))) return false;
  }
  const double big = 100.0 * r;
  for (int i = 0; i < d; ++i) {
    for (double sign : {-1.0, 1.0}) {
      Vec x = center;
      x[i] += sign * big;
      if (!sees(x)) return false;
    }
  }
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < cfg_.placement_samples; ++t) {
    Vec g(d);
    for (int i = 0; i < d; ++i) g[i] = normal(rng_);
    const double radius = big * std::pow(unit(rng_), 1.0 / d);
    if (!sees(center + g.normalized() * radius)) return false;
  }
  return true;
}

void Refiner::check_invariants(const IterationRecord& rec, const Subset& s_k, const Subset& d_k,
                               const Subset& b_k) {
  for (std::size_t y : d_k) {
    if (in_saved_[y]) throw InvariantViolation("refine_once: deleted set meets a saved set at " + fmt_point(c_, y));
  }
  for (std::size_t y : s_k) {
    if (in_saved_[y]) throw InvariantViolation("refine_once: saved sets overlap at " + fmt_point(c_, y));
  }
  const double wk = wcoord(rec.x_k);
  if (wk < last_w_) throw InvariantViolation("refine_once: w-coordinates of x_k decreased");
  last_w_ = wk;
  for (std::size_t x : b_k) {
    if (in_f_[x] && counts_[x] >= m_) {
      throw InvariantViolation("refine_once: point " + fmt_point(c_, x) + " of B^k still sees M scales");
    }
  }
  if (s_k.empty()) throw InvariantViolation("refine_once: empty saved set");
}

RefinementOutcome Refiner::run() {
  out_.w = w_;
  out_.alpha = alpha_;
  out_.m = m_;
  out_.delta = delta_;
  out_.mass_in = subset_mass(c_, f_);
  const int n = c_.intrinsic_dim();
  const double delta_n = std::pow(delta_, n);

  if (cfg_.eps) {
    out_.eps = *cfg_.eps;
    out_.k_prune = 0.0;
  } else if (out_.mass_in > 0.0) {
    const double probe = out_.mass_in / 4.0;
    const PruneResult pr = prune_low_density(c_, f_, probe, ScaleRange::within(delta_, std::max(1.0, delta_)));
    out_.k_prune = std::max(pr.removed_mass / probe, 1.0);
    out_.eps = out_.mass_in / (4.0 * out_.k_prune);
  }

  init_counts();
  in_saved_.assign(c_.size(), 0);
  double saved_mass = 0.0;
  double deleted_mass = 0.0;
  double c_s = std::numeric_limits<double>::infinity();

  // Candidates in the order defining x_k: smallest w-coordinate, then lexicographic.
  Subset order = f_;
  std::vector<double> wc(c_.size());
  for (std::size_t x : f_) wc[x] = wcoord(x);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (wc[a] != wc[b]) return wc[a] < wc[b];
    for (int i = 0; i < c_.ambient_dim(); ++i) {
      if (c_.point(a)[i] != c_.point(b)[i]) return c_.point(a)[i] < c_.point(b)[i];
    }
    return a < b;
  });
  std::size_t cursor = 0;  // k-bad points are (k-1)-bad, so the scan never moves backwards

  for (int k = 0;; ++k) {
    if (saved_mass >= out_.mass_in / 2.0 || deleted_mass >= out_.mass_in / 2.0) {
      out_.stop = StopReason::Stop1;
      for (const Subset& s : out_.saved) out_.k_set = subset_union(out_.k_set, s);
      break;
    }
    while (cursor < order.size() && !is_bad(order[cursor])) ++cursor;
    if (cursor == order.size()) {
      out_.stop = StopReason::Stop2;
      Subset fk;
      for (std::size_t x : f_) {
        if (in_f_[x]) fk.push_back(x);
      }
      out_.k_set = subset_difference(fk, current_fkm());
      break;
    }
    if (k >= static_cast<int>(f_.size())) throw InvariantViolation("refine_once: iteration count exceeds |F|");

    IterationRecord rec;
    rec.k = k;
    rec.x_k = order[cursor];
    rec.x_coords = c_.point_vec(rec.x_k);
    rec.j_k = choose_scale(rec.x_k);
    rec.z_k = witness(rec.x_k, rec.j_k);
    rec.mass_f = 0.0;
    for (std::size_t x : f_) {
      if (in_f_[x]) rec.mass_f += c_.weight(x);
    }

    double cfac = alpha_ * cfg_.c_factor;
    const double scale = scale_radius(rec.j_k);
    Subset b_k;
    bool placed = false;
    for (int attempt = 0; attempt <= cfg_.c_retries; ++attempt, cfac /= 2.0) {
      b_k = ball_query(c_, c_.point(rec.x_k), 100.0 * cfac * scale, &in_f_);
      if (placement_ok(rec.x_k, rec.z_k, rec.j_k, cfac * scale, b_k)) {
        placed = true;
        break;
      }
    }
    if (!placed) {
      throw StageCollapseError("refine_once: resolution exhausted, no radius factor places z_k for x_k = " +
                               fmt_point(c_, rec.x_k));
    }
    rec.c = cfac;
    rec.r_k = cfac * scale;
    rec.size_b = b_k.size();

    Subset s_k;
    for (std::size_t q : ball_query(c_, c_.point(rec.x_k), rec.r_k, &in_f_)) {
      if (in_fkm(q)) s_k.push_back(q);
    }

    std::vector<char> doomed(c_.size(), 0);
    const ScaleRange three{rec.j_k - 1, rec.j_k + 1};
    for (std::size_t x : b_k) {
      scan_cone(c_, in_f_, c_.point(x), full_, three, Openness::Interior, false, [&](std::size_t q, int) {
        if (q != x) doomed[q] = 1;
      });
    }
    Subset d_k;
    for (std::size_t q : f_) {
      if (doomed[q]) d_k.push_back(q);
    }

    rec.mass_s = subset_mass(c_, s_k);
    rec.mass_d = subset_mass(c_, d_k);
    remove(d_k);
    check_invariants(rec, s_k, d_k, b_k);
    for (std::size_t q : s_k) in_saved_[q] = 1;
    for (std::size_t q : s_k) {
      if (!in_f_[q]) throw InvariantViolation("refine_once: saved point left F^{k+1}");
    }

    saved_mass += rec.mass_s;
    deleted_mass += rec.mass_d;
    c_s = std::min(c_s, rec.mass_s / std::max(rec.mass_d, delta_n));
    out_.saved.push_back(std::move(s_k));
    out_.deleted.push_back(std::move(d_k));
    out_.ledger.push_back(std::move(rec));
  }

  out_.iterations = static_cast<int>(out_.ledger.size());
  out_.c_s = c_s;
  out_.termination_bound =
      std::isfinite(c_s) ? static_cast<std::size_t>(std::ceil(2.0 * out_.mass_in / (c_s * delta_n)))
                         : std::numeric_limits<std::size_t>::max();
  if (static_cast<std::size_t>(out_.iterations) > out_.termination_bound) {
    throw InvariantViolation("refine_once: iteration count exceeds the termination bound");
  }
  out_.mass_retained = subset_mass(c_, out_.k_set);
  out_.certificate = visitation_counts(c_, out_.k_set, VisitParams::one_sided(w_, alpha_ / 2.0), range_,
                                       cfg_.oracle_certificate);
  if (out_.certificate.max_count() > m_ - 1) {
    throw InvariantViolation("refine_once: certificate fails, max count " +
                             std::to_string(out_.certificate.max_count()) + " > M - 1 = " + std::to_string(m_ - 1));
  }
  return out_;
}

}  // namespace

RefinementOutcome refine_once(const WeightedCloud& c, const Subset& f, const Vec& w, double alpha, int m,
                              const RefineConfig& cfg) {
  if (m < 1) throw InputError("refine_once: M must be >= 1");
  if (!(alpha > 0.0 && alpha <= 0.1)) throw InputError("refine_once: alpha must lie in (0, 1/10]");
  if (w.size() != c.ambient_dim() || std::abs(w.norm() - 1.0) > 1e-12) {
    throw InputError("refine_once: w must be a unit vector of the ambient dimension");
  }
  if (!(cfg.c_factor > 0.0) || cfg.c_retries < 0) throw InputError("refine_once: invalid radius factor settings");
  if (cfg.eps && !(*cfg.eps > 0.0)) throw InputError("refine_once: eps must be positive");
  const ScaleRange range = cfg.scales ? *cfg.scales : default_visit_scales(c);
  const double delta = cfg.delta ? *cfg.delta : c.delta_res();
  if (!(delta > 0.0)) throw InputError("refine_once: delta must be positive");
  const VisitationReport pre = visitation_counts(c, f, VisitParams::one_sided(w, alpha), range);
  if (pre.max_count() > m) {
    throw InputError("refine_once: F lacks the (alpha, M, w)-property, max count " +
                     std::to_string(pre.max_count()) + " > M = " + std::to_string(m));
  }
  Refiner r(c, f, w, alpha, m, cfg, range, delta);
  return r.run();
}

std::string refinement_ledger_json(const RefinementOutcome& out) {
  nlohmann::json j;
  j["schema"] = "graphcarve/1";
  j["w"] = std::vector<double>(out.w.data(), out.w.data() + out.w.size());
  j["alpha"] = out.alpha;
  j["M"] = out.m;
  j["eps"] = out.eps;
  j["K_prune"] = out.k_prune;
  j["delta"] = out.delta;
  j["c_S"] = std::isfinite(out.c_s) ? nlohmann::json(out.c_s) : nlohmann::json(nullptr);
  j["iterations"] = out.iterations;
  j["stop"] = to_string(out.stop);
  j["mass_in"] = out.mass_in;
  j["mass_retained"] = out.mass_retained;
  j["certificate_max_count"] = out.certificate.max_count();
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : out.ledger) {
    rows.push_back({{"k", r.k},
                    {"x_k", r.x_k},
                    {"x", std::vector<double>(r.x_coords.data(), r.x_coords.data() + r.x_coords.size())},
                    {"z_k", r.z_k},
                    {"j_k", r.j_k},
                    {"r_k", r.r_k},
                    {"c", r.c},
                    {"mass_S", r.mass_s},
                    {"mass_D", r.mass_d},
                    {"mass_F", r.mass_f}});
  }
  j["ledger"] = rows;
  return j.dump(2);
}

ScheduleResult refine_schedule(const WeightedCloud& c, const Subset& e2, double theta, int m0,
                               const DirectionCover& cover, const ScheduleConfig& cfg) {
  if (m0 < 0) throw InputError("refine_schedule: M0 must be >= 0");
  if (cover.v.ambient_dim() != c.ambient_dim()) throw InputError("refine_schedule: cover dimension mismatch");
  if (cover.s > std::ldexp(1.0, -m0) * (1.0 + 1e-12)) throw InputError("refine_schedule: cover needs s <= 2^-M0");
  if (cover.alpha * cover.b_used > theta * (1.0 + 1e-9)) {
    throw InputError("refine_schedule: cover aperture exceeds theta / b_used");
  }
  const ScaleRange range = cfg.refine.scales ? *cfg.refine.scales : default_visit_scales(c);
  VisitParams two = VisitParams::two_sided(theta);
  two.axis = cover.v;
  const int start = visitation_counts(c, e2, two, range).max_count();
  if (start > m0) {
    throw InputError("refine_schedule: E2 sees " + std::to_string(start) + " > M0 scales at aperture theta");
  }

  ScheduleResult res;
  res.mass_in = subset_mass(c, e2);
  Subset current = e2;
  if (m0 > 0) {
    for (std::size_t j = 0; j < cover.directions.size(); ++j) {
      DirectionRecord rec;
      rec.index = j;
      rec.mass_before = subset_mass(c, current);
      double aperture = cover.alpha;
      while (true) {
        const int mj =
            visitation_counts(c, current, VisitParams::one_sided(cover.directions[j], aperture), range).max_count();
        if (mj == 0) break;
        if (rec.applications == m0) {
          throw InvariantViolation("refine_schedule: direction " + std::to_string(j) + " still sees " +
                                   std::to_string(mj) + " scales after M0 applications");
        }
        RefineConfig rc = cfg.refine;
        rc.scales = range;
        rc.seed = derive_seed(cfg.refine.seed, j * 64 + static_cast<std::size_t>(rec.applications));
        RefinementOutcome out = refine_once(c, current, cover.directions[j], aperture, mj, rc);
        rec.m_sequence.push_back(mj);
        rec.stops.push_back(out.stop);
        rec.ledger.insert(rec.ledger.end(), out.ledger.begin(), out.ledger.end());
        current = std::move(out.k_set);
        aperture /= 2.0;
        ++rec.applications;
      }
      rec.final_aperture = aperture;
      rec.mass_after = subset_mass(c, current);
      res.total_applications += rec.applications;
      if (rec.applications > 0) res.directions.push_back(std::move(rec));
    }
  }
  res.e3 = current;
  res.mass_out = subset_mass(c, current);
  VisitParams fin = VisitParams::two_sided(cover.alpha);
  fin.axis = cover.v;
  res.certified_aperture = cover.alpha;
  res.certificate = visitation_counts(c, res.e3, fin, range, cfg.oracle_final);
  if (res.certificate.max_count() != 0) {
    throw InvariantViolation("refine_schedule: final two-sided certificate fails with max count " +
                             std::to_string(res.certificate.max_count()));
  }
  if (res.mass_out < cfg.floor_mass) {
    throw StageCollapseError("refine_schedule: mass of E3 " + std::to_string(res.mass_out) + " below floor " +
                             std::to_string(cfg.floor_mass) + " (E2 mass " + std::to_string(res.mass_in) + ")");
  }
  return res;
}

}  // namespace graphcarve
