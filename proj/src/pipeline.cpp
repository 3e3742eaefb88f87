#include "graphcarve/pipeline.hpp"

#include "graphcarve/error.hpp"
#include "graphcarve/grassmann.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <limits>
#include <sstream>

namespace graphcarve {

namespace {

// Shortest text that parses back to the same double.
std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InputError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size() || v.find('-') != std::string::npos) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InputError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InputError("config: '" + key + "' expects true or false, got '" + v + "'");
}

void require_positive(const std::string& key, double v) {
  if (!(v > 0.0)) throw InputError("config: '" + key + "' must be positive");
}

class Clock {
 public:
  explicit Clock(PipelineReport& r) : r_(r), t_(std::chrono::steady_clock::now()) {}
  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    r_.wall_seconds.emplace_back(stage, std::chrono::duration<double>(now - t_).count());
    t_ = now;
  }

 private:
  PipelineReport& r_;
  std::chrono::steady_clock::time_point t_;
};

std::string ledger_text(const std::vector<StageMass>& ledger) {
  std::string out;
  for (const auto& s : ledger) out += " " + s.stage + "=" + std::to_string(s.mass);
  return out;
}

double min_pairwise_distance(const WeightedCloud& c, double radius) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < c.size(); ++p) {
    for (std::size_t q : ball_query(c, c.point(p), radius)) {
      if (q != p) best = std::min(best, std::sqrt(squared_distance(c.point(p), c.point(q), c.ambient_dim())));
    }
  }
  return best;
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    if (key == "kappa") {
      cfg.kappa = parse_double(key, v);
    } else if (key == "energy_target" || key == "C") {
      cfg.energy_target = parse_double(key, v);
    } else if (key == "theta0") {
      cfg.theta0 = v == "auto" ? std::nullopt : std::optional<double>(parse_double(key, v));
    } else if (key == "m0_cap") {
      cfg.m0_cap = static_cast<int>(parse_u64(key, v));
    } else if (key == "prune_factor") {
      cfg.prune_factor = parse_double(key, v);
    } else if (key == "energy_samples") {
      cfg.energy_samples = parse_u64(key, v);
    } else if (key == "energy_bin") {
      cfg.energy_bin = v == "auto" ? std::nullopt : std::optional<double>(parse_double(key, v));
    } else if (key == "cover_check_samples") {
      cfg.cover_check_samples = parse_u64(key, v);
    } else if (key == "cover_oversample") {
      cfg.cover_oversample = parse_double(key, v);
    } else if (key == "refine_c_factor") {
      cfg.refine_c_factor = parse_double(key, v);
    } else if (key == "refine_eps") {
      cfg.refine_eps = v == "auto" ? std::nullopt : std::optional<double>(parse_double(key, v));
    } else if (key == "scale_choice") {
      cfg.scale_choice = scale_choice_from_string(v);
    } else if (key == "oracle_steps") {
      cfg.oracle_steps = parse_bool(key, v);
    } else if (key == "collapse_floor") {
      cfg.collapse_floor = parse_double(key, v);
    } else if (key == "containment_tol_factor") {
      cfg.containment_tol_factor = parse_double(key, v);
    } else if (key == "seed") {
      cfg.seed = parse_u64(key, v);
    } else {
      throw InputError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  require_positive("kappa", cfg.kappa);
  require_positive("energy_target", cfg.energy_target);
  if (cfg.theta0) require_positive("theta0", *cfg.theta0);
  require_positive("prune_factor", cfg.prune_factor);
  require_positive("energy_samples", static_cast<double>(cfg.energy_samples));
  if (cfg.energy_bin) require_positive("energy_bin", *cfg.energy_bin);
  require_positive("cover_check_samples", static_cast<double>(cfg.cover_check_samples));
  require_positive("cover_oversample", cfg.cover_oversample);
  require_positive("refine_c_factor", cfg.refine_c_factor);
  if (cfg.refine_eps) require_positive("refine_eps", *cfg.refine_eps);
  require_positive("collapse_floor", cfg.collapse_floor);
  require_positive("containment_tol_factor", cfg.containment_tol_factor);
  return cfg;
}

std::string config_to_text(const PipelineConfig& cfg) {
  std::ostringstream out;
  out << "kappa = " << num(cfg.kappa) << "\n";
  out << "energy_target = " << num(cfg.energy_target) << "\n";
  out << "theta0 = ";
  if (cfg.theta0) {
    out << num(*cfg.theta0) << "\n";
  } else {
    out << "auto\n";
  }
  out << "m0_cap = " << cfg.m0_cap << "\n";
  out << "prune_factor = " << num(cfg.prune_factor) << "\n";
  out << "energy_samples = " << cfg.energy_samples << "\n";
  out << "energy_bin = ";
  if (cfg.energy_bin) {
    out << num(*cfg.energy_bin) << "\n";
  } else {
    out << "auto\n";
  }
  out << "cover_check_samples = " << cfg.cover_check_samples << "\n";
  out << "cover_oversample = " << num(cfg.cover_oversample) << "\n";
  out << "refine_c_factor = " << num(cfg.refine_c_factor) << "\n";
  out << "refine_eps = ";
  if (cfg.refine_eps) {
    out << num(*cfg.refine_eps) << "\n";
  } else {
    out << "auto\n";
  }
  out << "scale_choice = " << to_string(cfg.scale_choice) << "\n";
  out << "oracle_steps = " << (cfg.oracle_steps ? "true" : "false") << "\n";
  out << "collapse_floor = " << num(cfg.collapse_floor) << "\n";
  out << "containment_tol_factor = " << num(cfg.containment_tol_factor) << "\n";
  out << "seed = " << cfg.seed << "\n";
  return out.str();
}

PipelineReport run_pipeline(const WeightedCloud& input, const PipelineConfig& cfg) {
  if (input.empty()) throw InputError("pipeline: empty cloud");
  PipelineReport r;
  r.config = cfg;
  Clock clock(r);
  const int d = input.ambient_dim();
  const int n = input.intrinsic_dim();

  // Normalize into B(0,1): optional rotation, bounding-box center to 0, scale.
  Mat pts = input.points();
  if (cfg.base_plane) {
    if (cfg.base_plane->ambient_dim() != d || cfg.base_plane->dim() != n) {
      throw InputError("pipeline: base_plane has the wrong shape");
    }
    pts = aligning_rotation(*cfg.base_plane) * pts;
  }
  r.center = (pts.rowwise().maxCoeff() + pts.rowwise().minCoeff()) / 2.0;
  pts.colwise() -= r.center;
  const double radius = pts.colwise().norm().maxCoeff();
  r.scale_factor = radius > 0.0 ? 1.0 / radius : 1.0;
  pts *= r.scale_factor;
  const Vec weights = input.weights() * std::pow(r.scale_factor, n);
  double res = input.delta_res() * r.scale_factor;
  {
    const WeightedCloud probe(n, pts, weights, res);
    res = std::min(res, min_pairwise_distance(probe, res));
  }
  r.working_resolution = res;
  r.cloud = std::make_shared<const WeightedCloud>(n, pts, weights, res);
  const WeightedCloud& c = *r.cloud;
  r.scales = ScaleRange::covering(res, std::max(c.diameter(), res));
  clock.lap("normalize");

  r.e1 = all_points(c);
  const double mass1 = c.total_mass();
  const double floor_mass = cfg.collapse_floor * mass1;
  auto record = [&](const std::string& stage, const Subset& s) {
    r.ledger.push_back({stage, subset_mass(c, s), s.size()});
    if (r.ledger.back().mass < floor_mass) {
      throw StageCollapseError("pipeline: stage " + stage + " collapsed below the floor " +
                               std::to_string(floor_mass) + "; ledger:" + ledger_text(r.ledger));
    }
  };
  record("E1", r.e1);
  if (mass1 < cfg.kappa) {
    r.mass_warning = true;
    r.warnings.push_back("mass(E1) = " + std::to_string(mass1) + " is below kappa = " + std::to_string(cfg.kappa));
  }

  // Hypothesis (ii) as a diagnostic.
  const Subspace base = Subspace::base_plane(d, n);
  r.energy = projection_energy(c, r.e1, base, cfg.kappa, cfg.energy_samples, cfg.energy_bin ? std::max(*cfg.energy_bin, res) : 2.0 * res,
                               derive_seed(cfg.seed, 1));
  if (r.energy.mean_l2_sq > cfg.energy_target) {
    r.energy_warning = true;
    r.warnings.push_back("projection energy " + std::to_string(r.energy.mean_l2_sq) + " exceeds target " +
                         std::to_string(cfg.energy_target));
  }
  clock.lap("energy");

  // Two pruning passes.
  r.prune_eps = cfg.prune_factor * mass1;
  const ScaleRange density = ScaleRange::within(res, std::max(1.0, res));
  const PruneResult p1 = prune_low_density(c, r.e1, r.prune_eps, density);
  r.e_prime = p1.kept;
  r.prune_k1 = p1.k_estimate;
  record("E'", r.e_prime);
  const PruneResult p2 = prune_low_density(c, r.e_prime, r.prune_eps, density);
  r.e = p2.kept;
  r.prune_k2 = p2.k_estimate;
  record("E", r.e);
  clock.lap("prune");

  // E^M with the smallest M >= 1 halving the mass, capped at m0_cap + 1.
  r.alpha0 = alpha0(n, cfg.kappa);
  r.theta0 = cfg.theta0 ? *cfg.theta0 : r.alpha0 / 2.0;
  const Subspace vertical = Subspace::vertical_axis(d, n);
  VisitParams two = VisitParams::two_sided(r.theta0);
  two.axis = vertical;
  const VisitationReport before = visitation_counts(c, r.e, two, r.scales);
  r.histogram_before = before.histogram();
  const double mass_e = subset_mass(c, r.e);
  r.m = 1;
  for (; r.m <= cfg.m0_cap + 1; ++r.m) {
    if (subset_mass(c, bad_set(before, r.m, BadFlavor::AtLeast)) <= mass_e / 2.0) break;
  }
  r.m = std::min(r.m, cfg.m0_cap + 1);
  r.e2 = subset_difference(r.e, bad_set(before, r.m, BadFlavor::AtLeast));
  record("E2", r.e2);
  r.m0 = visitation_counts(c, r.e2, two, r.scales).max_count();
  clock.lap("bad_set");

  // Cover with alpha = theta0 / b, iterated until the measured b fits.
  const double s = std::ldexp(1.0, -r.m0);
  double b = 2.0;
  std::optional<DirectionCover> cover;
  CoverOptions co;
  co.check_samples = cfg.cover_check_samples;
  co.seed = derive_seed(cfg.seed, 2);
  co.oversample = cfg.cover_oversample;
  for (int round = 0; round < 8; ++round) {
    const double alpha = r.theta0 / b;
    if (!(alpha < 1.0)) throw InputError("pipeline: theta0 too large for a cone cover");
    cover = build_cover(vertical, alpha, s, co);
    if (cover->b_used <= b) break;
    b = cover->b_used * (1.0 + 1e-9);
    cover.reset();
  }
  if (!cover) throw InvariantViolation("pipeline: cover constant b did not settle");
  r.cover_alpha = cover->alpha;
  r.cover_s = s;
  r.cover_size = cover->size();
  r.cover_b_measured = cover->b_used;
  r.b_used = r.theta0 / cover->alpha;
  if (cover->alpha > 0.1) throw InputError("pipeline: cover aperture above 1/10, lower theta0");
  // The schedule checks b_used * alpha <= theta; use the value the aperture was built with.
  cover->b_used = r.b_used;
  clock.lap("cover");

  ScheduleConfig sc;
  sc.refine.c_factor = cfg.refine_c_factor;
  sc.refine.eps = cfg.refine_eps;
  sc.refine.scale_choice = cfg.scale_choice;
  sc.refine.seed = derive_seed(cfg.seed, 3);
  sc.refine.oracle_certificate = cfg.oracle_steps;
  sc.refine.scales = r.scales;
  sc.refine.delta = res;
  sc.floor_mass = floor_mass;
  sc.oracle_final = true;
  r.schedule = refine_schedule(c, r.e2, r.theta0, r.m0, *cover, sc);
  r.e3 = r.schedule.e3;
  record("E3", r.e3);
  r.histogram_after = visitation_counts(c, r.e3, two, r.scales).histogram();
  clock.lap("refine");

  try {
    r.graph = certify_graph(c, r.e3, cover->alpha);
  } catch (const InputError& e) {
    throw InvariantViolation(std::string("pipeline: certified set is not a graph: ") + e.what());
  }
  const double tol = cfg.containment_tol_factor * res;
  r.containment_e3 = containment_report(c, r.e3, r.graph, tol);
  r.containment_e1 = containment_report(c, r.e1, r.graph, tol);
  r.retained_fraction = subset_mass(c, r.e3) / mass1;
  clock.lap("extract");
  return r;
}

std::string report_to_json(const PipelineReport& r, bool include_timings) {
  nlohmann::json j;
  j["schema"] = "graphcarve/1";
  j["config"] = config_to_text(r.config);
  j["normalization"] = {{"scale_factor", r.scale_factor},
                        {"center", std::vector<double>(r.center.data(), r.center.data() + r.center.size())},
                        {"working_resolution", r.working_resolution},
                        {"j_min", r.scales.j_min},
                        {"j_max", r.scales.j_max}};
  nlohmann::json ledger = nlohmann::json::array();
  for (const auto& s : r.ledger) ledger.push_back({{"stage", s.stage}, {"mass", s.mass}, {"points", s.points}});
  j["mass_ledger"] = ledger;
  j["energy"] = {{"mean_l2_sq", r.energy.mean_l2_sq},
                 {"samples", r.energy.per_sample.size()},
                 {"acceptance_rate", r.energy.acceptance_rate},
                 {"target", r.config.energy_target},
                 {"warning", r.energy_warning}};
  j["warnings"] = r.warnings;
  j["theta0"] = r.theta0;
  j["alpha0"] = r.alpha0;
  j["M"] = r.m;
  j["M0"] = r.m0;
  j["prune"] = {{"eps", r.prune_eps}, {"K_first", r.prune_k1}, {"K_second", r.prune_k2}};
  j["visitation_histogram_before"] = r.histogram_before;
  j["visitation_histogram_after"] = r.histogram_after;
  j["cover"] = {{"alpha", r.cover_alpha}, {"s", r.cover_s}, {"directions", r.cover_size},
                {"b_measured", r.cover_b_measured}};
  j["b_used"] = r.b_used;
  nlohmann::json dirs = nlohmann::json::array();
  for (const auto& dr : r.schedule.directions) {
    std::vector<std::string> stops;
    for (StopReason sr : dr.stops) stops.push_back(to_string(sr));
    dirs.push_back({{"direction", dr.index},
                    {"applications", dr.applications},
                    {"final_aperture", dr.final_aperture},
                    {"M_sequence", dr.m_sequence},
                    {"mass_before", dr.mass_before},
                    {"mass_after", dr.mass_after},
                    {"iterations", dr.ledger.size()},
                    {"stops", stops}});
  }
  j["refinement"] = {{"applications", r.schedule.total_applications},
                     {"directions_refined", dirs},
                     {"certified_aperture", r.schedule.certified_aperture},
                     {"certificate_max_count", r.schedule.certificate.max_count()}};
  j["graph"] = {{"L", r.graph.lipschitz},
                {"inflated_L", r.graph.inflated_lipschitz()},
                {"L_bound", r.graph.bound},
                {"points", r.graph.size()}};
  j["containment"] = {{"tol", r.containment_e3.tol},
                      {"E3_fraction", r.containment_e3.fraction},
                      {"E1_contained_mass", r.containment_e1.contained_mass},
                      {"E1_fraction", r.containment_e1.fraction}};
  j["retained_fraction"] = r.retained_fraction;
  if (include_timings) {
    nlohmann::json t;
    for (const auto& [stage, sec] : r.wall_seconds) t[stage] = sec;
    j["wall_seconds"] = t;
  }
  return j.dump(2);
}

}  // namespace graphcarve
