#pragma once

#include "graphcarve/cloud.hpp"

#include <optional>
#include <vector>

namespace graphcarve {

enum class VisitMode { TwoSidedCodim, OneSidedDir };

struct VisitParams {
  VisitMode mode = VisitMode::TwoSidedCodim;
  double aperture = 0.5;
  /// One-sided only.
  Vec direction;
  /// Two-sided only; defaults to the vertical axis R^{d-n}.
  std::optional<Subspace> axis;
  Openness openness = Openness::Closed;

  static VisitParams two_sided(double theta);
  static VisitParams one_sided(Vec w, double alpha);

  ConeKernel kernel(const WeightedCloud& c) const;
};

/// Default scales: annuli covering every distance in [delta_res, diameter].
ScaleRange default_visit_scales(const WeightedCloud& c);

/// Calls hit(q, j) once per (q, j) with q in mask, q != vertex, q in the cone annulus of
/// scale j. Grid mode visits only cells meeting the bounding box of the cone at 2^-j_min.
template <class F>
void scan_cone(const WeightedCloud& c, const std::vector<char>& mask, const double* vertex,
               const ConeKernel& kernel, const ScaleRange& range, Openness openness, bool oracle, F&& hit) {
  if (range.empty()) return;
  const int d = c.ambient_dim();
  const double outer = scale_radius(range.j_min);
  const double outer2 = outer * outer;
  const double inner2 = scale_radius(range.j_max + 1) * scale_radius(range.j_max + 1);
  std::array<double, kMaxDim> delta{};
  auto visit = [&](std::size_t q) {
    if (!mask[q]) return;
    const double* y = c.point(q);
    double dist2 = 0.0;
    for (int i = 0; i < d; ++i) {
      delta[static_cast<std::size_t>(i)] = y[i] - vertex[i];
      dist2 += delta[static_cast<std::size_t>(i)] * delta[static_cast<std::size_t>(i)];
    }
    if (dist2 > outer2 || dist2 < inner2 || dist2 == 0.0) return;
    int js[2];
    const int found = annulus_scales(dist2, range, js);
    if (found == 0) return;
    if (!kernel.admits(delta.data(), dist2, openness)) return;
    for (int k = 0; k < found; ++k) {
      if (openness == Openness::Interior &&
          !in_annulus(dist2, scale_radius(js[k]), scale_radius(js[k] + 1), Openness::Interior)) {
        continue;
      }
      hit(q, js[k]);
    }
  };
  if (oracle) {
    for (std::size_t q = 0; q < c.size(); ++q) visit(q);
    return;
  }
  std::array<double, kMaxDim> lo{};
  std::array<double, kMaxDim> hi{};
  kernel.bounding_box(outer, lo.data(), hi.data());
  for (int i = 0; i < d; ++i) {
    lo[static_cast<std::size_t>(i)] += vertex[i];
    hi[static_cast<std::size_t>(i)] += vertex[i];
  }
  c.grid().for_each_in_box(lo.data(), hi.data(), visit);
}

struct VertexVisits {
  std::size_t point = 0;
  std::vector<int> scales;               // ascending j
  std::vector<std::size_t> witnesses;    // lowest-index witness per scale
  int count() const { return static_cast<int>(scales.size()); }
};

struct VisitationReport {
  VisitParams params;
  ScaleRange scales;
  std::vector<VertexVisits> vertices;

  int max_count() const;
  /// histogram[k] = number of vertices with count k.
  std::vector<std::size_t> histogram() const;
};

VisitationReport visitation_counts(const WeightedCloud& c, const Subset& s, const VisitParams& params,
                                   const ScaleRange& range, bool oracle = false);

enum class BadFlavor { AtLeast, Exactly };

Subset bad_set(const VisitationReport& report, int m, BadFlavor flavor);
Subset bad_set(const WeightedCloud& c, const Subset& s, const VisitParams& params, int m,
               const ScaleRange& range, BadFlavor flavor, bool oracle = false);

}  // namespace graphcarve
