#pragma once

#include "graphcarve/cloud.hpp"

#include <map>
#include <string>
#include <vector>

namespace graphcarve {

/// A finite Lipschitz graph over the base plane R^n: sample sites t_i with values
/// f(t_i) in R^{d-n}, certified pairwise slope L.
struct GraphModel {
  int d = 0;
  int n = 0;
  Mat sites;   // n x N
  Mat values;  // (d-n) x N
  Subset points;
  double theta = 0.0;
  double lipschitz = 0.0;
  double bound = 0.0;  // sqrt(1 - theta^2) / theta
  std::map<std::vector<double>, std::size_t> site_lookup;

  std::size_t size() const { return static_cast<std::size_t>(sites.cols()); }
  /// sqrt(d - n) L, the constant of the coordinatewise extension.
  double inflated_lipschitz() const { return std::sqrt(static_cast<double>(d - n)) * lipschitz; }
};

/// Checks |pi_{R^n}(x - y)| >= theta |x - y| for all pairs and computes the exact pairwise slope.
/// Throws InputError naming a violating pair.
GraphModel certify_graph(const WeightedCloud& c, const Subset& e3, double theta);

/// Coordinatewise McShane midpoint extension, exact at sample sites.
Vec extend_mcshane(const GraphModel& g, const Vec& query);

struct ContainmentReport {
  double contained_mass = 0.0;
  double total_mass = 0.0;
  double fraction = 0.0;
  double tol = 0.0;
};

/// Mass of E1 within vertical distance tol of the extended graph.
ContainmentReport containment_report(const WeightedCloud& c, const Subset& e1, const GraphModel& g, double tol);

/// CSV rows (t_1..t_n, A_1..A_{d-n}) over a regular grid spanning the sites' bounding box.
std::string graph_grid_csv(const GraphModel& g, int per_axis);

}  // namespace graphcarve
