#include "graphcarve/cone_audit.hpp"

#include "graphcarve/error.hpp"

#include <algorithm>

namespace graphcarve {

VisitParams VisitParams::two_sided(double theta) {
  VisitParams p;
  p.mode = VisitMode::TwoSidedCodim;
  p.aperture = theta;
  return p;
}

VisitParams VisitParams::one_sided(Vec w, double alpha) {
  VisitParams p;
  p.mode = VisitMode::OneSidedDir;
  p.aperture = alpha;
  p.direction = std::move(w);
  return p;
}

ConeKernel VisitParams::kernel(const WeightedCloud& c) const {
  if (mode == VisitMode::OneSidedDir) {
    if (direction.size() != c.ambient_dim()) throw InputError("visitation: direction dimension mismatch");
    return ConeKernel::one_sided(direction, aperture);
  }
  if (axis) {
    if (axis->ambient_dim() != c.ambient_dim()) throw InputError("visitation: axis dimension mismatch");
    return ConeKernel::two_sided(*axis, aperture);
  }
  return ConeKernel::two_sided(Subspace::vertical_axis(c.ambient_dim(), c.intrinsic_dim()), aperture);
}

ScaleRange default_visit_scales(const WeightedCloud& c) {
  return ScaleRange::covering(c.delta_res(), std::max(c.diameter(), c.delta_res()));
}

int VisitationReport::max_count() const {
  int m = 0;
  for (const auto& v : vertices) m = std::max(m, v.count());
  return m;
}

std::vector<std::size_t> VisitationReport::histogram() const {
  std::vector<std::size_t> h(static_cast<std::size_t>(max_count()) + 1, 0);
  for (const auto& v : vertices) ++h[static_cast<std::size_t>(v.count())];
  return h;
}

VisitationReport visitation_counts(const WeightedCloud& c, const Subset& s, const VisitParams& params,
                                   const ScaleRange& range, bool oracle) {
  if (!range.empty() && scale_radius(range.j_max) < c.delta_res()) {
    throw InputError("visitation: finest scale 2^-j_max is below delta_res");
  }
  if (range.size() > 200) throw InputError("visitation: scale range is not finite in practice (> 200 scales)");
  VisitationReport rep;
  rep.params = params;
  rep.scales = range;
  const ConeKernel kernel = params.kernel(c);
  const std::vector<char> mask = subset_mask(c, s);
  const std::size_t width = static_cast<std::size_t>(range.size());
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> witness(width);
  rep.vertices.reserve(s.size());
  for (std::size_t x : s) {
    std::fill(witness.begin(), witness.end(), kNone);
    scan_cone(c, mask, c.point(x), kernel, range, params.openness, oracle, [&](std::size_t q, int j) {
      if (q == x) return;
      auto& slot = witness[static_cast<std::size_t>(j - range.j_min)];
      if (slot == kNone || q < slot) slot = q;
    });
    VertexVisits v;
    v.point = x;
    for (std::size_t k = 0; k < width; ++k) {
      if (witness[k] == kNone) continue;
      v.scales.push_back(range.j_min + static_cast<int>(k));
      v.witnesses.push_back(witness[k]);
    }
    rep.vertices.push_back(std::move(v));
  }
  return rep;
}

Subset bad_set(const VisitationReport& report, int m, BadFlavor flavor) {
  if (m < 0) throw InputError("bad_set: M must be >= 0");
  Subset out;
  for (const auto& v : report.vertices) {
    if (flavor == BadFlavor::AtLeast ? v.count() >= m : v.count() == m) out.push_back(v.point);
  }
  return out;
}

Subset bad_set(const WeightedCloud& c, const Subset& s, const VisitParams& params, int m,
               const ScaleRange& range, BadFlavor flavor, bool oracle) {
  return bad_set(visitation_counts(c, s, params, range, oracle), m, flavor);
}

}  // namespace graphcarve
