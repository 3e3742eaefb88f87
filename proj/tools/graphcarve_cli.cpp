#include "graphcarve/cone_audit.hpp"
#include "graphcarve/cone_cover.hpp"
#include "graphcarve/error.hpp"
#include "graphcarve/generate.hpp"
#include "graphcarve/graph_extract.hpp"
#include "graphcarve/grassmann.hpp"
#include "graphcarve/pipeline.hpp"
#include "graphcarve/refinery.hpp"
#include "graphcarve/report_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

using namespace graphcarve;
using nlohmann::json;

namespace {

struct Common {
  std::string input;
  std::string output_dir = ".";
  std::string config;
  std::optional<std::uint64_t> seed_arg;
  bool oracle = false;
  bool json_out = false;
  int n = 1;
  double delta_res = 0.0;
  std::uint64_t seed() const { return seed_arg.value_or(1); }
};

void add_common(CLI::App* app, Common& c, bool needs_input) {
  auto* in = app->add_option("--input", c.input, "point cloud (.csv or .json)");
  if (needs_input) in->required();
  app->add_option("--output-dir", c.output_dir, "directory for output files");
  app->add_option("--config", c.config, "pipeline config file (key = value)");
  app->add_option("--seed", c.seed_arg, "random seed (default 1, or the config value)");
  app->add_flag("--oracle", c.oracle, "brute-force queries instead of the grid");
  app->add_flag("--json", c.json_out, "machine-readable stdout");
  app->add_option("--n", c.n, "intrinsic dimension for CSV input");
  app->add_option("--delta-res", c.delta_res, "resolution for CSV input (default: min pairwise distance)");
}

WeightedCloud load(const Common& c) {
  if (std::filesystem::path(c.input).extension() == ".json") return load_cloud(c.input, c.n, 0.0);
  if (c.delta_res > 0.0) return load_cloud(c.input, c.n, c.delta_res);
  // Resolution unknown: use a tiny value to read, then the minimum pairwise distance.
  const WeightedCloud raw = load_cloud(c.input, c.n, 1e-12);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < raw.size(); ++p) {
    for (std::size_t q = p + 1; q < raw.size(); ++q) {
      best = std::min(best, squared_distance(raw.point(p), raw.point(q), raw.ambient_dim()));
    }
  }
  const double res = std::isfinite(best) ? std::sqrt(best) : 1.0;
  return WeightedCloud(c.n, raw.points(), raw.weights(), res);
}

PipelineConfig load_config(const Common& c) {
  PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : parse_config(read_file(c.config));
  if (c.seed_arg) cfg.seed = *c.seed_arg;
  if (c.oracle) cfg.oracle_steps = true;
  return cfg;
}

Vec parse_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string out_path(const Common& c, const std::string& name) {
  std::filesystem::create_directories(c.output_dir);
  return (std::filesystem::path(c.output_dir) / name).string();
}

void print(const Common& c, const json& j, const std::string& text) {
  if (c.json_out) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << text;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graphcarve: find Lipschitz graphs inside weighted point clouds"};
  app.require_subcommand(1);

  Common common;

  GenerateParams gp;
  std::vector<std::string> stacks;
  std::string gen_out = "cloud.csv";
  auto* gen = app.add_subcommand("generate", "write a synthetic cloud");
  add_common(gen, common, false);
  gen->add_option("--kind", gp.kind, "lipschitz_graph, union_of_graphs, outlier_stacks, four_corner_cantor, hrycak_like");
  gen->add_option("--d", gp.d);
  gen->add_option("--count", gp.count, "samples per base axis");
  gen->add_option("--t-min", gp.t_min);
  gen->add_option("--t-max", gp.t_max);
  gen->add_option("--lipschitz", gp.lipschitz);
  gen->add_option("--pieces", gp.pieces);
  gen->add_option("--depth", gp.depth);
  gen->add_option("--stack", stacks, "site:height:count");
  gen->add_flag("--unit-weights", gp.unit_weights);
  gen->add_option("--graphs", gp.graphs);
  gen->add_option("--offset", gp.offset);
  gen->add_option("--levels", gp.levels);
  gen->add_option("--output", gen_out, "file name inside --output-dir");

  std::optional<double> band_lo, band_hi;
  auto* adr = app.add_subcommand("adr-check", "Ahlfors-David regularity ratios");
  add_common(adr, common, true);
  adr->add_option("--band-lo", band_lo);
  adr->add_option("--band-hi", band_hi);

  double kappa = 0.2;
  std::size_t energy_samples = 64;
  double bin = 0.02;
  auto* energy = app.add_subcommand("energy", "projection energy around the base plane");
  add_common(energy, common, true);
  energy->add_option("--kappa", kappa);
  energy->add_option("--samples", energy_samples);
  energy->add_option("--bin", bin);

  double theta = 0.1;
  std::vector<double> w_dir;
  auto* visit = app.add_subcommand("visitation", "cone visitation counts");
  add_common(visit, common, true);
  visit->add_option("--theta", theta, "aperture");
  visit->add_option("--w", w_dir, "one-sided direction (two-sided when absent)");

  int cover_d = 2;
  double cover_alpha = 0.25;
  double cover_s = 1.0;
  std::size_t cover_samples = 100000;
  auto* cover = app.add_subcommand("cover", "build and check a direction cover");
  add_common(cover, common, false);
  cover->add_option("--d", cover_d);
  cover->add_option("--alpha", cover_alpha);
  cover->add_option("--s", cover_s);
  cover->add_option("--samples", cover_samples);

  double refine_alpha = 0.1;
  int refine_m = 1;
  auto* refine = app.add_subcommand("refine", "one pass of the deletion algorithm");
  add_common(refine, common, true);
  refine->add_option("--w", w_dir)->required();
  refine->add_option("--alpha", refine_alpha);
  refine->add_option("--M", refine_m);

  int grid = 200;
  auto* extract = app.add_subcommand("extract", "certify the cloud as a graph and export it");
  add_common(extract, common, true);
  extract->add_option("--theta", theta);
  extract->add_option("--grid", grid, "samples per base axis");

  bool timings = false;
  auto* pipe = app.add_subcommand("pipeline", "run every stage and write report.json");
  add_common(pipe, common, true);
  pipe->add_flag("--timings", timings, "include wall-clock times in the report");

  int gv_d = 3, gv_count = 1000;
  double upsilon = 0.5;
  std::vector<double> deltas{0.1, 0.05, 0.025};
  std::uint64_t gv_samples = 1000000;
  auto* gv = app.add_subcommand("grassmann-verify", "Monte-Carlo check of the Grassmannian measure bound");
  add_common(gv, common, false);
  gv->add_option("--d", gv_d);
  gv->add_option("--upsilon", upsilon);
  gv->add_option("--delta", deltas, "values of delta / |z|");
  gv->add_option("--samples", gv_samples);
  gv->add_option("--v0-trials", gv_count);

  auto* plots = app.add_subcommand("plots", "run the pipeline and write CSV/SVG plots");
  add_common(plots, common, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      gp.n = common.n;
      gp.seed = common.seed();
      for (const auto& s : stacks) {
        Stack st;
        char c1 = 0, c2 = 0;
        std::istringstream in(s);
        if (!(in >> st.site >> c1 >> st.height >> c2 >> st.count) || c1 != ':' || c2 != ':') {
          throw InputError("--stack expects site:height:count");
        }
        gp.stacks.push_back(st);
      }
      const WeightedCloud c = generate(gp);
      const std::string path = out_path(common, gen_out);
      save_cloud(path, c);
      print(common, {{"path", path}, {"points", c.size()}, {"delta_res", c.delta_res()}, {"mass", c.total_mass()}},
            path + ": " + std::to_string(c.size()) + " points, delta_res " + std::to_string(c.delta_res()) + "\n");
    } else if (adr->parsed()) {
      const WeightedCloud c = load(common);
      std::optional<std::pair<double, double>> band;
      if (band_lo && band_hi) band = std::make_pair(*band_lo, *band_hi);
      const AdrReport r = adr_check(c, all_points(c), density_scales(c), band);
      print(common, {{"c1_hat", r.c1_hat}, {"c2_hat", r.c2_hat}, {"violations", r.violations.size()}},
            "C1_hat " + std::to_string(r.c1_hat) + "\nC2_hat " + std::to_string(r.c2_hat) + "\nviolations " +
                std::to_string(r.violations.size()) + "\n");
    } else if (energy->parsed()) {
      const WeightedCloud c = load(common);
      const EnergyEstimate e = projection_energy(c, all_points(c), Subspace::base_plane(c.ambient_dim(), c.intrinsic_dim()),
                                                 kappa, energy_samples, std::max(bin, c.delta_res()), common.seed());
      print(common, {{"mean_l2_sq", e.mean_l2_sq}, {"samples", e.per_sample.size()}, {"acceptance_rate", e.acceptance_rate}},
            "mean l2^2 " + std::to_string(e.mean_l2_sq) + " over " + std::to_string(e.per_sample.size()) + " planes\n");
    } else if (visit->parsed()) {
      const WeightedCloud c = load(common);
      const VisitParams p = w_dir.empty() ? VisitParams::two_sided(theta) : VisitParams::one_sided(parse_vec(w_dir), theta);
      const VisitationReport r = visitation_counts(c, all_points(c), p, default_visit_scales(c), common.oracle);
      std::string text = "max count " + std::to_string(r.max_count()) + "\n";
      const auto h = r.histogram();
      for (std::size_t k = 0; k < h.size(); ++k) text += "  " + std::to_string(k) + ": " + std::to_string(h[k]) + "\n";
      print(common, {{"max_count", r.max_count()}, {"histogram", h}}, text);
    } else if (cover->parsed()) {
      CoverOptions opt;
      opt.check_samples = cover_samples;
      opt.seed = common.seed();
      const DirectionCover dc = build_cover(Subspace::vertical_axis(cover_d, common.n), cover_alpha, cover_s, opt);
      const std::string path = out_path(common, "cover.json");
      write_file(path, cover_to_json(dc));
      print(common, {{"path", path}, {"directions", dc.size()}, {"b_used", dc.b_used}, {"c_cover", dc.c_cover}},
            std::to_string(dc.size()) + " directions, b_used " + std::to_string(dc.b_used) + ", C_cover " +
                std::to_string(dc.c_cover) + "\n");
    } else if (refine->parsed()) {
      const WeightedCloud c = load(common);
      RefineConfig rc;
      rc.seed = common.seed();
      rc.oracle_certificate = true;
      const RefinementOutcome r = refine_once(c, all_points(c), parse_vec(w_dir), refine_alpha, refine_m, rc);
      const std::string path = out_path(common, "refinement.json");
      write_file(path, refinement_ledger_json(r));
      print(common, {{"path", path}, {"iterations", r.iterations}, {"stop", to_string(r.stop)}, {"mass_retained", r.mass_retained}},
            std::to_string(r.iterations) + " iterations, " + to_string(r.stop) + ", retained mass " +
                std::to_string(r.mass_retained) + " of " + std::to_string(r.mass_in) + "\n");
    } else if (extract->parsed()) {
      const WeightedCloud c = load(common);
      const GraphModel g = certify_graph(c, all_points(c), theta);
      const ContainmentReport cr = containment_report(c, all_points(c), g, 2.0 * c.delta_res());
      write_file(out_path(common, "graph.csv"), graph_grid_csv(g, grid));
      const json j{{"L", g.lipschitz}, {"inflated_L", g.inflated_lipschitz()},
                   {"contained_mass", cr.contained_mass}, {"fraction", cr.fraction}};
      write_file(out_path(common, "graph.json"), j.dump(2));
      print(common, j, "L " + std::to_string(g.lipschitz) + ", contained fraction " + std::to_string(cr.fraction) + "\n");
    } else if (pipe->parsed() || plots->parsed()) {
      const WeightedCloud c = load(common);
      const PipelineReport r = run_pipeline(c, load_config(common));
      const std::string report = report_to_json(r, timings);
      write_file(out_path(common, "report.json"), report);
      std::vector<std::string> files;
      if (plots->parsed()) files = emit_plots(r, common.output_dir);
      std::string text;
      for (const auto& s : r.ledger) text += s.stage + " mass " + std::to_string(s.mass) + " (" + std::to_string(s.points) + " points)\n";
      text += "retained fraction " + std::to_string(r.retained_fraction) + ", L " + std::to_string(r.graph.lipschitz) + "\n";
      for (const auto& w : r.warnings) text += "warning: " + w + "\n";
      for (const auto& f : files) text += "wrote " + f + "\n";
      if (common.json_out) {
        std::cout << report << "\n";
      } else {
        std::cout << text;
      }
    } else if (gv->parsed()) {
      const int gv_n = common.n;
      std::mt19937_64 rng(common.seed());
      const Subspace w = Subspace::base_plane(gv_d, gv_n);
      Vec z = Vec::Zero(gv_d);
      z[gv_d - 1] = 1.0;
      json rows = json::array();
      std::string text;
      std::vector<double> xs, ys;
      for (std::size_t i = 0; i < deltas.size(); ++i) {
        const MeasureEstimate m = measure_lower_bound_mc(w, z, deltas[i], upsilon, gv_samples, derive_seed(common.seed(), i));
        rows.push_back({{"delta", deltas[i]}, {"a_hat", m.a_hat}, {"ratio", m.ratio}, {"in_regime", m.in_regime}});
        text += "delta " + std::to_string(deltas[i]) + ": A_hat " + std::to_string(m.a_hat) + ", ratio " +
                std::to_string(m.ratio) + "\n";
        if (m.a_hat > 0.0) {
          xs.push_back(std::log(deltas[i]));
          ys.push_back(std::log(m.a_hat));
        }
      }
      double slope = std::numeric_limits<double>::quiet_NaN();
      if (xs.size() >= 2) {
        const Vec x = parse_vec(xs), y = parse_vec(ys);
        const double mx = x.mean(), my = y.mean();
        slope = ((x.array() - mx) * (y.array() - my)).sum() / (x.array() - mx).square().sum();
      }
      int failures = 0;
      const double a0 = alpha0(gv_n, upsilon);
      for (int t = 0; t < gv_count; ++t) {
        const Subspace wt(random_frame(rng, gv_d, gv_n));
        Vec zt = Vec::Zero(gv_d);
        for (int i = 0; i < gv_d; ++i) zt[i] = std::normal_distribution<double>()(rng);
        // Shrink the W-component of z until it is admissible.
        const Vec pw = project(wt, zt);
        zt = zt - pw + pw * (0.999 * a0 * zt.norm() / std::max(pw.norm(), 1e-300));
        if (project(wt, zt).norm() > a0 * zt.norm()) continue;
        const Subspace v0 = construct_v0(wt, zt, upsilon);
        if (project(v0, zt).norm() > 1e-10 * zt.norm() || grassmann_distance(v0, wt) > upsilon / 2.0) ++failures;
      }
      text += "log-log slope " + std::to_string(slope) + "\nconstruct_v0 failures " + std::to_string(failures) + " of " +
              std::to_string(gv_count) + "\n";
      print(common, {{"estimates", rows}, {"slope", slope}, {"v0_failures", failures}, {"v0_trials", gv_count}}, text);
      if (failures > 0) return exit_code(ErrorKind::InvariantViolation);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  }
  return 0;
}
