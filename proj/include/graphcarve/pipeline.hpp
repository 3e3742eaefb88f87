#pragma once

#include "graphcarve/cone_audit.hpp"
#include "graphcarve/cone_cover.hpp"
#include "graphcarve/graph_extract.hpp"
#include "graphcarve/refinery.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace graphcarve {

struct PipelineConfig {
  double kappa = 0.2;
  /// Target for the projection-energy diagnostic; exceeding it only warns.
  double energy_target = 3.5;
  /// Cone aperture theta_0; alpha_0(n, kappa) / 2 when unset.
  std::optional<double> theta0;
  /// M is capped at m0_cap + 1, so M0 <= m0_cap.
  int m0_cap = 6;
  /// eps of each pruning pass as a fraction of mass(E1).
  double prune_factor = 0.02;
  std::size_t energy_samples = 64;
  /// Projection bin width; 2x the working resolution when unset.
  std::optional<double> energy_bin;
  std::size_t cover_check_samples = 20000;
  double cover_oversample = 1.0;
  double refine_c_factor = 1.0 / 64.0;
  std::optional<double> refine_eps;
  ScaleChoice scale_choice = ScaleChoice::Largest;
  /// Brute-force certificate after every refine_once (the final certificate is always brute force).
  bool oracle_steps = false;
  /// Collapse floor as a fraction of mass(E1).
  double collapse_floor = 1e-3;
  /// Containment tolerance in units of the working resolution.
  double containment_tol_factor = 2.0;
  std::uint64_t seed = 1;
  /// When set, the cloud is rotated so this n-plane becomes R^n before anything else.
  std::optional<Subspace> base_plane;
};

/// Parses `key = value` lines (# starts a comment). Unknown keys are an InputError.
PipelineConfig parse_config(const std::string& text);
std::string config_to_text(const PipelineConfig& cfg);

struct StageMass {
  std::string stage;
  double mass = 0.0;
  std::size_t points = 0;
};

struct PipelineReport {
  PipelineConfig config;
  std::shared_ptr<const WeightedCloud> cloud;  // normalized
  double scale_factor = 1.0;
  Vec center;
  double working_resolution = 0.0;
  ScaleRange scales;

  std::vector<StageMass> ledger;  // E1, E', E, E2, E3
  Subset e1, e_prime, e, e2, e3;

  EnergyEstimate energy;
  bool energy_warning = false;
  bool mass_warning = false;
  std::vector<std::string> warnings;

  double theta0 = 0.0;
  double alpha0 = 0.0;
  int m = 0;
  int m0 = 0;
  double prune_eps = 0.0;
  double prune_k1 = 0.0;
  double prune_k2 = 0.0;
  std::vector<std::size_t> histogram_before;
  std::vector<std::size_t> histogram_after;

  double cover_alpha = 0.0;
  double cover_s = 1.0;
  std::size_t cover_size = 0;
  double cover_b_measured = 0.0;
  double b_used = 0.0;
  ScheduleResult schedule;

  GraphModel graph;
  ContainmentReport containment_e3;
  ContainmentReport containment_e1;
  double retained_fraction = 0.0;

  std::vector<std::pair<std::string, double>> wall_seconds;
};

/// Normalization, pruning, bad-set removal, cover, refinement, extraction.
/// StageCollapseError when a stage falls below the collapse floor.
PipelineReport run_pipeline(const WeightedCloud& input, const PipelineConfig& cfg);

/// Deterministic JSON (schema "graphcarve/1"); wall-times only when asked for.
std::string report_to_json(const PipelineReport& r, bool include_timings = false);

}  // namespace graphcarve
