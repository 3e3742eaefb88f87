// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include "graphcarve/cone_audit.hpp"
#include "graphcarve/cone_cover.hpp"
#include "graphcarve/error.hpp"
#include "graphcarve/generate.hpp"
#include "graphcarve/graph_extract.hpp"
#include "graphcarve/grassmann.hpp"
#include "graphcarve/pipeline.hpp"
#include "graphcarve/refinery.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

using namespace graphcarve;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Vec random_unit(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> g;
  Vec v(d);
  do {
    for (int i = 0; i < d; ++i) v[i] = g(rng);
  } while (v.norm() < 1e-6);
  return v.normalized();
}

WeightedCloud random_cloud(std::mt19937_64& rng, int d, int n, std::size_t count) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> w(0.1, 2.0);
  Mat pts(d, static_cast<Eigen::Index>(count));
  Vec wt(static_cast<Eigen::Index>(count));
  for (Eigen::Index p = 0; p < pts.cols(); ++p) {
    for (int i = 0; i < d; ++i) pts(i, p) = u(rng);
    wt[p] = w(rng);
  }
  double best = 1e300;
  for (Eigen::Index p = 0; p < pts.cols(); ++p) {
    for (Eigen::Index q = p + 1; q < pts.cols(); ++q) best = std::min(best, (pts.col(p) - pts.col(q)).norm());
  }
  return WeightedCloud(n, pts, wt, std::min(best, 0.02));
}

bool same_visits(const VisitationReport& a, const VisitationReport& b) {
  if (a.vertices.size() != b.vertices.size()) return false;
  for (std::size_t i = 0; i < a.vertices.size(); ++i) {
    const auto& x = a.vertices[i];
    const auto& y = b.vertices[i];
    if (x.point != y.point || x.scales != y.scales || x.witnesses != y.witnesses) return false;
  }
  return true;
}

void criterion_oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::size_t checks = 0;
  std::size_t mismatches = 0;
  std::size_t hits = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + trial % 2;
    const int n = d == 2 ? 1 : 1 + (trial / 2) % 2;
    const std::size_t count = 100 + static_cast<std::size_t>(trial) * 8;
    const WeightedCloud c = random_cloud(rng, d, n, count);
    const Subset all = all_points(c);
    const ScaleRange range = default_visit_scales(c);
    std::uniform_real_distribution<double> ap(0.05, 0.9);
    std::vector<VisitParams> params;
    params.push_back(VisitParams::two_sided(ap(rng)));
    params.push_back(VisitParams::one_sided(random_unit(rng, d), ap(rng)));
    VisitParams open = VisitParams::one_sided(random_unit(rng, d), ap(rng));
    open.openness = Openness::Interior;
    params.push_back(open);
    for (const VisitParams& p : params) {
      const auto grid = visitation_counts(c, all, p, range, false);
      const auto oracle = visitation_counts(c, all, p, range, true);
      ++checks;
      if (!same_visits(grid, oracle)) ++mismatches;
      for (const auto& v : oracle.vertices) hits += v.scales.size();
      for (int m = 1; m <= 3; ++m) {
        for (BadFlavor f : {BadFlavor::AtLeast, BadFlavor::Exactly}) {
          ++checks;
          if (bad_set(c, all, p, m, range, f, false) != bad_set(c, all, p, m, range, f, true)) ++mismatches;
        }
      }
    }
    std::uniform_real_distribution<double> rad(0.0, 0.6);
    for (int q = 0; q < 50; ++q) {
      const Vec centre = random_unit(rng, d) * rad(rng);
      const double r = rad(rng);
      ++checks;
      if (ball_query(c, centre.data(), r) != ball_query_oracle(c, centre.data(), r)) ++mismatches;
      const std::size_t p = static_cast<std::size_t>(q) % c.size();
      ++checks;
      if (ball_query(c, c.point(p), r) != ball_query_oracle(c, c.point(p), r)) ++mismatches;
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream detail;
  detail << checks << " comparisons, " << mismatches << " mismatches, " << hits << " cone hits, " << fmt("%.2f", secs)
         << " s (limit 30 s)";
  report(1, "oracle equivalence", mismatches == 0 && hits > 0 && secs < 30.0, detail.str());
}

struct RefineCase {
  WeightedCloud cloud;
  Vec w;
};

RefineCase refine_case(int i) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(1000 + i));
  GenerateParams p;
  p.seed = static_cast<std::uint64_t>(i + 1);
  switch (i % 5) {
    case 0: {
      if (i % 10 == 5) {
        p.kind = "union_of_graphs";
        p.count = 250;
        p.graphs = 2 + i % 3;
        p.offset = 0.03;
        p.lipschitz = 0.005;
        WeightedCloud c = generate(p);
        return {std::move(c), (Vec::Unit(2, 1) + 0.02 * random_unit(rng, 2)).normalized()};
      }
      p.kind = "outlier_stacks";
      p.count = 300;
      p.stacks = {{0.3, 0.2, 40}, {0.7, 0.15, 30}};
      WeightedCloud c = generate(p);
      return {std::move(c), Vec::Unit(2, 1)};
    }
    case 1: {
      p.kind = "union_of_graphs";
      p.count = 200;
      p.graphs = 3;
      p.offset = 0.05;
      p.lipschitz = 0.05;
      WeightedCloud c = generate(p);
      return {std::move(c), Vec::Unit(2, 1)};
    }
    case 2: {
      p.kind = "four_corner_cantor";
      p.depth = 4;
      WeightedCloud c = generate(p);
      return {std::move(c), random_unit(rng, 2)};
    }
    case 3: {
      if (i % 10 == 3) {
        p.kind = "hrycak_like";
        p.count = 300;
        p.levels = 5;
        WeightedCloud c = generate(p);
        return {std::move(c), random_unit(rng, 2)};
      }
      p.kind = "union_of_graphs";
      p.count = 300;
      p.graphs = 4;
      p.offset = 0.04;
      p.lipschitz = 0.005;
      WeightedCloud c = generate(p);
      return {std::move(c), (Vec::Unit(2, 1) + 0.03 * random_unit(rng, 2)).normalized()};
    }
    default: {
      p.kind = "union_of_graphs";
      p.d = 3;
      p.n = i % 2 == 0 ? 1 : 2;
      p.count = p.n == 1 ? 150 : 14;
      p.graphs = 3;
      p.offset = 0.05;
      p.lipschitz = 0.05;
      WeightedCloud c = generate(p);
      Vec w = Vec::Unit(3, p.n);
      if (i % 3 == 0) w = (w + 0.05 * random_unit(rng, 3)).normalized();
      return {std::move(c), w};
    }
  }
}

void criterion_refinement_soundness() {
  int runs = 0;
  int clean = 0;
  int nontrivial = 0;
  int violations = 0;
  int other_errors = 0;
  std::size_t total_iterations = 0;
  std::string first_problem;
  for (int i = 0; i < 100; ++i) {
    RefineCase rc = refine_case(i);
    const WeightedCloud& c = rc.cloud;
    const double alpha = i % 2 == 0 ? 0.1 : 0.05;
    const int target_m = 1 + i % 3;
    const ScaleRange range = default_visit_scales(c);
    const VisitationReport full = visitation_counts(c, all_points(c), VisitParams::one_sided(rc.w, alpha), range);
    const Subset f = subset_difference(all_points(c), bad_set(full, target_m + 1, BadFlavor::AtLeast));
    const int present = visitation_counts(c, f, VisitParams::one_sided(rc.w, alpha), range).max_count();
    const int m = std::max(1, std::min(target_m, present));
    RefineConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(i);
    cfg.scale_choice = static_cast<ScaleChoice>(i % 3);
    cfg.oracle_certificate = true;
    ++runs;
    try {
      const RefinementOutcome out = refine_once(c, f, rc.w, alpha, m, cfg);
      const VisitationReport cert =
          visitation_counts(c, out.k_set, VisitParams::one_sided(rc.w, alpha / 2.0), range, true);
      const double delta_n = std::pow(c.delta_res(), c.intrinsic_dim());
      const bool bounded = out.iterations == 0 ||
                           static_cast<double>(out.iterations) <= std::ceil(2.0 * out.mass_in / (out.c_s * delta_n));
      const bool subset_ok = subset_difference(out.k_set, f).empty();
      if (cert.max_count() <= m - 1 && bounded && subset_ok) {
        ++clean;
      } else if (first_problem.empty()) {
        first_problem = "run " + std::to_string(i) + ": certificate " + std::to_string(cert.max_count()) + " vs M-1 " +
                        std::to_string(m - 1);
      }
      if (out.iterations > 0) ++nontrivial;
      total_iterations += static_cast<std::size_t>(out.iterations);
    } catch (const InvariantViolation& e) {
      ++violations;
      if (first_problem.empty()) first_problem = "run " + std::to_string(i) + ": " + e.what();
    } catch (const Error& e) {
      ++other_errors;
      if (first_problem.empty()) first_problem = "run " + std::to_string(i) + ": " + e.what();
    }
  }
  std::ostringstream detail;
  detail << clean << "/" << runs << " runs certified, " << nontrivial << " with deletions, " << total_iterations
         << " iterations, " << violations << " invariant violations, " << other_errors << " other errors";
  if (!first_problem.empty()) detail << "; " << first_problem;
  report(2, "refinement soundness", clean == runs && violations == 0 && nontrivial >= 30, detail.str());
}

WeightedCloud graph_with_outliers() {
  GenerateParams p;
  p.kind = "outlier_stacks";
  p.count = 2000;
  p.lipschitz = 0.3;
  p.seed = 3;
  p.stacks = {{0.2, 0.3, 50}, {0.4, 0.3, 50}, {0.6, 0.3, 50}, {0.8, 0.3, 50}};
  return generate(p);
}

WeightedCloud cantor() {
  GenerateParams p;
  p.kind = "four_corner_cantor";
  p.depth = 6;
  return generate(p);
}

double graph_fraction = -1.0;

void criterion_graph_recovery() {
  const WeightedCloud c = graph_with_outliers();
  const double outlier_share = 200.0 * std::pow(c.delta_res(), 1) / c.total_mass();
  const auto t0 = Clock::now();
  try {
    const PipelineReport r = run_pipeline(c, PipelineConfig{});
    const double secs = seconds_since(t0);
    graph_fraction = r.retained_fraction;
    const double l_bound = r.b_used / r.theta0;
    const bool ok = r.retained_fraction >= 0.5 && r.graph.lipschitz <= l_bound &&
                    r.containment_e3.fraction == 1.0 && secs < 20.0 &&
                    r.containment_e3.tol <= 2.0 * r.working_resolution;
    std::ostringstream detail;
    detail << c.size() << " points (outlier mass " << fmt("%.3f", outlier_share) << "), retained "
           << fmt("%.3f", r.retained_fraction) << " (>= 0.5), L " << fmt("%.4f", r.graph.lipschitz) << " <= b/theta0 "
           << fmt("%.2f", l_bound) << ", containment " << fmt("%.4f", r.containment_e3.fraction) << ", "
           << fmt("%.2f", secs) << " s (limit 20 s)";
    report(3, "graph recovery", ok, detail.str());
  } catch (const Error& e) {
    report(3, "graph recovery", false, std::string("pipeline error: ") + e.what());
  }
}

void criterion_cantor_contrast() {
  const WeightedCloud c = cantor();
  try {
    const PipelineReport r = run_pipeline(c, PipelineConfig{});
    const bool ok = c.size() == 4096 && graph_fraction > 0.0 && r.retained_fraction <= 0.2 &&
                    r.retained_fraction <= 0.4 * graph_fraction;
    std::ostringstream detail;
    detail << c.size() << " points, retained " << fmt("%.4f", r.retained_fraction) << " (<= 0.2 and <= 0.4 x "
           << fmt("%.4f", graph_fraction) << ")";
    report(4, "non-graph contrast", ok, detail.str());
  } catch (const StageCollapseError& e) {
    // Total collapse is the strongest form of the contrast.
    report(4, "non-graph contrast", graph_fraction > 0.0, std::string("stage collapse, retained 0: ") + e.what());
  } catch (const Error& e) {
    report(4, "non-graph contrast", false, std::string("pipeline error: ") + e.what());
  }
}

void criterion_grassmann() {
  const auto t0 = Clock::now();
  const Subspace w = Subspace::base_plane(3, 1);
  const Vec z = Vec::Unit(3, 2);
  const std::vector<double> deltas{0.1, 0.05, 0.025};
  std::vector<double> xs;
  std::vector<double> ys;
  std::ostringstream detail;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const MeasureEstimate m = measure_lower_bound_mc(w, z, deltas[i], 0.5, 1000000, 77 + i);
    detail << "A(" << deltas[i] << ")=" << fmt("%.5f", m.a_hat) << " ";
    if (m.a_hat > 0.0) {
      xs.push_back(std::log(deltas[i]));
      ys.push_back(std::log(m.a_hat));
    }
  }
  double slope = 0.0;
  if (xs.size() == deltas.size()) {
    const double mx = (xs[0] + xs[1] + xs[2]) / 3.0;
    const double my = (ys[0] + ys[1] + ys[2]) / 3.0;
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      num += (xs[i] - mx) * (ys[i] - my);
      den += (xs[i] - mx) * (xs[i] - mx);
    }
    slope = num / den;
  }
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int tested = 0;
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const int d = 2 + t % 4;
    const int n = 1 + t % (d - 1);
    const double upsilon = 0.2 + 0.6 * u(rng);
    const Subspace wt(random_frame(rng, d, n));
    Vec zt(d);
    for (int i = 0; i < d; ++i) zt[i] = g(rng);
    const Vec pw = project(wt, zt);
    const Vec perp = zt - pw;
    if (perp.norm() < 1e-6) continue;
    // |pi_W z| = f alpha0 |z| with f in [0, 1).
    const double a0 = alpha0(n, upsilon);
    const double f = 0.999 * u(rng) * a0;
    const double along = f / std::sqrt(1.0 - f * f) * perp.norm();
    const Vec zz = pw.norm() > 0.0 ? Vec(perp + pw.normalized() * along) : perp;
    ++tested;
    try {
      const Subspace v0 = construct_v0(wt, zz, upsilon);
      if (project(v0, zz).norm() > 1e-10 * zz.norm() || grassmann_distance(v0, wt) > upsilon / 2.0) ++bad;
    } catch (const Error&) {
      ++bad;
    }
  }
  const double secs = seconds_since(t0);
  detail << "slope " << fmt("%.3f", slope) << " in [0.8, 1.2]; construct_v0 " << tested - bad << "/" << tested
         << " postconditions hold; " << fmt("%.2f", secs) << " s (limit 60 s)";
  report(5, "grassmannian measure", slope >= 0.8 && slope <= 1.2 && bad == 0 && tested >= 990 && secs < 60.0,
         detail.str());
}

void criterion_cover() {
  bool ok = true;
  std::ostringstream detail;
  for (int d : {2, 3}) {
    double lo = 1e300;
    double hi = 0.0;
    double worst_b = 0.0;
    for (double alpha : {0.1, 0.25, 0.5}) {
      for (double s : {1.0, 0.5, 0.25}) {
        CoverOptions opt;
        opt.check_samples = 100000;
        try {
          const DirectionCover cover = build_cover(Subspace::vertical_axis(d, 1), alpha, s, opt);
          const double bound = cover.c_cover * std::pow(alpha * s, 1 - d);
          ok = ok && cover.certificate.passed && static_cast<double>(cover.size()) <= bound * (1.0 + 1e-12) &&
               cover.b_used <= 4.0;
          lo = std::min(lo, cover.c_cover);
          hi = std::max(hi, cover.c_cover);
          worst_b = std::max(worst_b, cover.b_used);
        } catch (const Error& e) {
          ok = false;
          detail << "d=" << d << " alpha=" << alpha << " s=" << s << ": " << e.what() << "; ";
        }
      }
    }
    ok = ok && hi <= 10.0 * lo;
    detail << "d=" << d << ": C_cover in [" << fmt("%.3f", lo) << ", " << fmt("%.3f", hi) << "], max b_used "
           << fmt("%.4f", worst_b) << "; ";
  }
  detail << "all inclusions checked on 1e5 samples";
  report(6, "cone cover certificate", ok, detail.str());
}

void criterion_extension() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-0.2, 1.2);
  int models = 0;
  std::size_t pairs = 0;
  std::size_t bad_pairs = 0;
  std::size_t bad_sites = 0;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    GenerateParams p;
    p.kind = "lipschitz_graph";
    p.d = 2 + t % 3;
    p.n = 1 + t % (p.d - 1);
    p.count = p.n == 1 ? 60 : (p.n == 2 ? 10 : 5);
    p.lipschitz = 0.2 + 0.1 * (t % 5);
    p.seed = static_cast<std::uint64_t>(t + 11);
    const WeightedCloud c = generate(p);
    const GraphModel g = certify_graph(c, all_points(c), 0.3);
    ++models;
    for (std::size_t a = 0; a < g.size(); ++a) {
      const Vec site = g.sites.col(static_cast<Eigen::Index>(a));
      if (extend_mcshane(g, site) != Vec(g.values.col(static_cast<Eigen::Index>(a)))) ++bad_sites;
    }
    const double bound = std::sqrt(static_cast<double>(g.d - g.n)) * g.lipschitz;
    for (int k = 0; k < 500; ++k) {
      Vec x(g.n);
      Vec y(g.n);
      for (int i = 0; i < g.n; ++i) {
        x[i] = u(rng);
        y[i] = u(rng);
      }
      if (k % 5 == 0) x = g.sites.col(static_cast<Eigen::Index>(static_cast<std::size_t>(k) % g.size()));
      const double gap = (extend_mcshane(g, x) - extend_mcshane(g, y)).norm() - bound * (x - y).norm();
      worst = std::max(worst, gap);
      ++pairs;
      if (gap > 1e-9) ++bad_pairs;
    }
  }
  std::ostringstream detail;
  detail << models << " models, " << pairs << " pairs, " << bad_pairs << " over the sqrt(d-n) L bound (worst excess "
         << fmt("%.2e", worst) << "), " << bad_sites << " sites not reproduced";
  report(7, "extension contract", models == 20 && pairs >= 10000 && bad_pairs == 0 && bad_sites == 0, detail.str());
}

void criterion_determinism() {
  const WeightedCloud c = graph_with_outliers();
  PipelineConfig cfg;
  cfg.seed = 42;
  try {
    const std::string a = report_to_json(run_pipeline(c, cfg));
    const std::string b = report_to_json(run_pipeline(c, cfg));
    report(8, "determinism", a == b, std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different"));
  } catch (const Error& e) {
    report(8, "determinism", false, std::string("pipeline error: ") + e.what());
  }
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria{
      criterion_oracle_equivalence, criterion_refinement_soundness, criterion_graph_recovery,
      criterion_cantor_contrast,    criterion_grassmann,            criterion_cover,
      criterion_extension,          criterion_determinism,
  };
  for (const auto& run : criteria) run();
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
