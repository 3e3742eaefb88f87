#pragma once

#include "graphcarve/cone_audit.hpp"
#include "graphcarve/cone_cover.hpp"

#include <optional>
#include <string>
#include <vector>

namespace graphcarve {

enum class ScaleChoice { Largest, Smallest, Random };
enum class StopReason { Stop1, Stop2 };

std::string to_string(StopReason r);
std::string to_string(ScaleChoice c);
ScaleChoice scale_choice_from_string(const std::string& s);

struct RefineConfig {
  /// r_k = c 2^-j_k with c starting at alpha * c_factor and halved on failed checks.
  double c_factor = 1.0 / 64.0;
  int c_retries = 16;
  /// Random points of B(x_k, 100 r_k) used to check the placement of z_k.
  int placement_samples = 64;
  /// Badness density; when unset, eps = mass(F) / (4 K_prune).
  std::optional<double> eps;
  ScaleChoice scale_choice = ScaleChoice::Largest;
  std::uint64_t seed = 1;
  /// Brute-force certificate on the output (grid otherwise).
  bool oracle_certificate = true;
  /// Scales of the visitation counts; default_visit_scales when unset.
  std::optional<ScaleRange> scales;
  /// Minimum scale delta; the cloud's delta_res when unset.
  std::optional<double> delta;
};

struct IterationRecord {
  int k = 0;
  std::size_t x_k = 0;
  Vec x_coords;
  std::size_t z_k = 0;
  int j_k = 0;
  double r_k = 0.0;
  double c = 0.0;
  double mass_s = 0.0;
  double mass_d = 0.0;
  double mass_f = 0.0;  // mass of F^k before the deletion
  std::size_t size_b = 0;
};

struct RefinementOutcome {
  Subset k_set;
  StopReason stop = StopReason::Stop2;
  Vec w;
  double alpha = 0.0;
  int m = 0;
  double mass_in = 0.0;
  double mass_retained = 0.0;
  double eps = 0.0;
  double k_prune = 0.0;
  double delta = 0.0;
  /// min over iterations of mass(S^k) / max(mass(D^k), delta^n); +inf without iterations.
  double c_s = 0.0;
  std::size_t termination_bound = 0;
  int iterations = 0;
  std::vector<IterationRecord> ledger;
  std::vector<Subset> saved;
  std::vector<Subset> deleted;
  VisitationReport certificate;
};

/// One run of the deletion algorithm: from F with the (alpha, M, w)-property to K with
/// the (alpha/2, M-1, w)-property. InputError on violated preconditions, InvariantViolation
/// on a failed internal check, StageCollapseError when no radius factor passes the check.
RefinementOutcome refine_once(const WeightedCloud& c, const Subset& f, const Vec& w, double alpha, int m,
                              const RefineConfig& cfg = {});

std::string refinement_ledger_json(const RefinementOutcome& out);

struct ScheduleConfig {
  RefineConfig refine;
  /// Collapse floor on mass(E3).
  double floor_mass = 0.0;
  bool oracle_final = true;
};

struct DirectionRecord {
  std::size_t index = 0;
  int applications = 0;
  double final_aperture = 0.0;
  std::vector<int> m_sequence;  // max count before each application
  double mass_before = 0.0;
  double mass_after = 0.0;
  std::vector<IterationRecord> ledger;
  std::vector<StopReason> stops;
};

struct ScheduleResult {
  Subset e3;
  double mass_in = 0.0;
  double mass_out = 0.0;
  std::vector<DirectionRecord> directions;
  /// Two-sided (cover.alpha, 0) check of E3.
  VisitationReport certificate;
  double certified_aperture = 0.0;
  int total_applications = 0;
};

/// Applies refine_once along every cover direction until no direction sees a cone.
/// The cover must have s <= 2^-M0; E2 must have the two-sided (b_used alpha, M0)-property.
ScheduleResult refine_schedule(const WeightedCloud& c, const Subset& e2, double theta, int m0,
                               const DirectionCover& cover, const ScheduleConfig& cfg = {});

}  // namespace graphcarve
