#include "graphcarve/geom.hpp"

#include "graphcarve/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace graphcarve {

namespace {

void check_ambient(int d) {
  if (d < 2 || d > kMaxDim) {
    throw InputError("ambient dimension " + std::to_string(d) + " outside [2, " +
                     std::to_string(kMaxDim) + "]");
  }
}

// Pivoted Gram-Schmidt: at every step take the remaining column with the largest
// residual, orthogonalize it twice against the accepted frame, normalize.
Mat canonical_frame(const Mat& spanning) {
  const Eigen::Index d = spanning.rows();
  const Eigen::Index k = spanning.cols();
  Mat residual = spanning;
  Mat frame(d, k);
  std::vector<bool> used(static_cast<std::size_t>(k), false);
  const double scale = std::max(spanning.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index step = 0; step < k; ++step) {
    Eigen::Index pivot = -1;
    double best = -1.0;
    for (Eigen::Index c = 0; c < k; ++c) {
      if (used[static_cast<std::size_t>(c)]) continue;
      const double norm = residual.col(c).norm();
      if (norm > best) {
        best = norm;
        pivot = c;
      }
    }
    if (best <= 1e-12 * scale) throw InputError("subspace spanning set is rank deficient");
    used[static_cast<std::size_t>(pivot)] = true;
    Vec v = residual.col(pivot);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < step; ++i) v -= frame.col(i).dot(v) * frame.col(i);
    }
    v.normalize();
    frame.col(step) = v;
    for (Eigen::Index c = 0; c < k; ++c) {
      if (!used[static_cast<std::size_t>(c)]) residual.col(c) -= v.dot(residual.col(c)) * v;
    }
  }
  return frame;
}

}  // namespace

Subspace::Subspace(const Mat& spanning) {
  check_ambient(static_cast<int>(spanning.rows()));
  if (spanning.cols() < 1 || spanning.cols() >= spanning.rows()) {
    throw InputError("subspace dimension must satisfy 1 <= k < d");
  }
  if (!spanning.allFinite()) throw InputError("subspace spanning set has non-finite entries");
  frame_ = canonical_frame(spanning);
  projector_ = frame_ * frame_.transpose();
}

Subspace::Subspace(Canonical, Mat frame) : frame_(std::move(frame)) {
  projector_ = frame_ * frame_.transpose();
}

Subspace Subspace::coordinate(int d, int first, int count) {
  check_ambient(d);
  if (count < 1 || count >= d || first < 0 || first + count > d) {
    throw InputError("invalid coordinate subspace");
  }
  Mat frame = Mat::Zero(d, count);
  for (int i = 0; i < count; ++i) frame(first + i, i) = 1.0;
  return Subspace(Canonical{}, std::move(frame));
}

Subspace Subspace::line(const Vec& direction) {
  Mat m(direction.size(), 1);
  m.col(0) = direction;
  return Subspace(m);
}

Subspace Subspace::orthogonal_complement() const {
  const Mat rot = aligning_rotation(*this);
  return Subspace(Mat(rot.bottomRows(ambient_dim() - dim()).transpose()));
}

Vec project(const Subspace& v, const Vec& x) {
  if (x.size() != v.ambient_dim()) throw InputError("point dimension does not match subspace");
  return v.frame() * (v.frame().transpose() * x);
}

Vec frame_coordinates(const Subspace& v, const Vec& x) {
  if (x.size() != v.ambient_dim()) throw InputError("point dimension does not match subspace");
  return v.frame().transpose() * x;
}

double grassmann_distance(const Subspace& v, const Subspace& w) {
  if (v.ambient_dim() != w.ambient_dim() || v.dim() != w.dim()) {
    throw InputError("grassmann_distance: subspaces of different shape");
  }
  const Mat diff = v.projector() - w.projector();
  Eigen::SelfAdjointEigenSolver<Mat> solver(diff, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Mat aligning_rotation(const Subspace& v) {
  const int d = v.ambient_dim();
  const int k = v.dim();
  Eigen::HouseholderQR<Mat> qr(v.frame());
  Mat q = qr.householderQ() * Mat::Identity(d, d);
  Mat basis(d, d);
  basis.leftCols(k) = v.frame();
  basis.rightCols(d - k) = q.rightCols(d - k);
  // Re-orthonormalize the complement against the exact frame.
  for (int c = k; c < d; ++c) {
    Vec col = basis.col(c);
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < c; ++i) col -= basis.col(i).dot(col) * basis.col(i);
    }
    basis.col(c) = col.normalized();
  }
  return basis.transpose();
}

ConeSpec::ConeSpec(Vec vertex, std::variant<Subspace, Vec> axis, double aperture,
                   std::optional<Radii> radii, Openness openness)
    : vertex_(std::move(vertex)),
      axis_(std::move(axis)),
      aperture_(aperture),
      radii_(radii),
      openness_(openness) {
  if (!(aperture_ > 0.0 && aperture_ < 1.0)) throw InputError("cone aperture must lie in (0,1)");
  if (radii_ && !(radii_->inner > 0.0 && radii_->inner < radii_->outer)) {
    throw InputError("cone radii must satisfy 0 < r < R");
  }
}

ConeSpec ConeSpec::two_sided(Vec vertex, Subspace axis, double aperture,
                             std::optional<Radii> radii, Openness openness) {
  if (vertex.size() != axis.ambient_dim()) throw InputError("cone vertex dimension mismatch");
  return ConeSpec(std::move(vertex), std::move(axis), aperture, radii, openness);
}

ConeSpec ConeSpec::one_sided(Vec vertex, Vec direction, double aperture,
                             std::optional<Radii> radii, Openness openness) {
  if (vertex.size() != direction.size()) throw InputError("cone vertex dimension mismatch");
  check_ambient(static_cast<int>(direction.size()));
  if (std::abs(direction.norm() - 1.0) > 1e-12) throw InputError("cone direction must be a unit vector");
  return ConeSpec(std::move(vertex), std::move(direction), aperture, radii, openness);
}

bool cone_contains(const ConeSpec& cone, const Vec& y) {
  const Vec& x = cone.vertex();
  if (y.size() != x.size()) throw InputError("query point dimension mismatch");
  const ConeKernel kernel = cone.is_one_sided()
                                ? ConeKernel::one_sided(cone.direction(), cone.aperture())
                                : ConeKernel::two_sided(cone.axis_subspace(), cone.aperture());
  std::array<double, kMaxDim> delta{};
  double dist2 = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    delta[static_cast<std::size_t>(i)] = y[i] - x[i];
    dist2 += delta[static_cast<std::size_t>(i)] * delta[static_cast<std::size_t>(i)];
  }
  if (cone.radii() && !in_annulus(dist2, cone.radii()->outer, cone.radii()->inner, cone.openness())) {
    return false;
  }
  return kernel.admits(delta.data(), dist2, cone.openness());
}

ConeKernel ConeKernel::two_sided(const Subspace& axis, double aperture) {
  if (!(aperture > 0.0)) throw InputError("cone aperture must be positive");
  ConeKernel k;
  k.d_ = axis.ambient_dim();
  k.k_ = axis.dim();
  k.one_sided_ = false;
  k.aperture_ = aperture;
  k.aperture2_ = aperture * aperture;
  for (int c = 0; c < k.k_; ++c) {
    for (int r = 0; r < k.d_; ++r) k.frame_[static_cast<std::size_t>(c * k.d_ + r)] = axis.frame()(r, c);
  }
  for (int i = 0; i < k.d_; ++i) {
    const double pii = std::clamp(axis.projector()(i, i), 0.0, 1.0);
    k.axis_halfwidth_[static_cast<std::size_t>(i)] = std::sqrt(pii);
    k.perp_halfwidth_[static_cast<std::size_t>(i)] = std::sqrt(1.0 - pii);
  }
  return k;
}

ConeKernel ConeKernel::one_sided(const Vec& direction, double aperture) {
  if (!(aperture > 0.0)) throw InputError("cone aperture must be positive");
  check_ambient(static_cast<int>(direction.size()));
  ConeKernel k;
  k.d_ = static_cast<int>(direction.size());
  k.k_ = 1;
  k.one_sided_ = true;
  k.aperture_ = aperture;
  k.aperture2_ = aperture * aperture;
  for (int i = 0; i < k.d_; ++i) {
    const double wi = direction[i];
    k.frame_[static_cast<std::size_t>(i)] = wi;
    k.axis_halfwidth_[static_cast<std::size_t>(i)] = std::abs(wi);
    k.perp_halfwidth_[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, 1.0 - wi * wi));
  }
  return k;
}

bool ConeKernel::admits(const double* delta, double dist2, Openness openness) const {
  std::array<double, kMaxDim> perp{};
  for (int i = 0; i < d_; ++i) perp[static_cast<std::size_t>(i)] = delta[i];
  double along = 0.0;
  for (int c = 0; c < k_; ++c) {
    const double* col = frame_.data() + c * d_;
    double coef = 0.0;
    for (int i = 0; i < d_; ++i) coef += col[i] * delta[i];
    for (int i = 0; i < d_; ++i) perp[static_cast<std::size_t>(i)] -= col[i] * coef;
    along = coef;
  }
  double perp2 = 0.0;
  for (int i = 0; i < d_; ++i) perp2 += perp[static_cast<std::size_t>(i)] * perp[static_cast<std::size_t>(i)];
  const double bound = aperture2_ * dist2;
  if (openness == Openness::Closed) {
    if (!(perp2 <= bound)) return false;
    return !one_sided_ || along >= 0.0;
  }
  if (!(perp2 < bound)) return false;
  return !one_sided_ || along > 0.0;
}

void ConeKernel::bounding_box(double outer, double* lo, double* hi) const {
  const double slack = 1e-9 * outer;
  for (int i = 0; i < d_; ++i) {
    const double side = aperture_ * outer * perp_halfwidth_[static_cast<std::size_t>(i)];
    if (one_sided_) {
      const double tip = outer * frame_[static_cast<std::size_t>(i)];
      lo[i] = std::min(0.0, tip) - side - slack;
      hi[i] = std::max(0.0, tip) + side + slack;
    } else {
      const double half = outer * axis_halfwidth_[static_cast<std::size_t>(i)] + side + slack;
      lo[i] = -half;
      hi[i] = half;
    }
  }
}

ConeKernel ConeKernel::reversed() const {
  ConeKernel k = *this;
  if (one_sided_) {
    for (int i = 0; i < d_; ++i) k.frame_[static_cast<std::size_t>(i)] = -frame_[static_cast<std::size_t>(i)];
  }
  return k;
}

bool in_annulus(double dist2, double outer, double inner, Openness openness) {
  const double outer2 = outer * outer;
  const double inner2 = inner * inner;
  if (openness == Openness::Closed) return dist2 >= inner2 && dist2 <= outer2;
  return dist2 > inner2 && dist2 < outer2;
}

ScaleRange ScaleRange::covering(double lo, double hi) {
  if (!(lo > 0.0) || !(hi >= lo)) throw InputError("scale range requires 0 < lo <= hi");
  ScaleRange range;
  range.j_min = static_cast<int>(std::floor(-std::log2(hi)));
  while (scale_radius(range.j_min) < hi) --range.j_min;
  while (scale_radius(range.j_min + 1) >= hi) ++range.j_min;
  range.j_max = static_cast<int>(std::ceil(-std::log2(lo))) - 1;
  while (scale_radius(range.j_max + 1) > lo) ++range.j_max;
  while (range.j_max > range.j_min && scale_radius(range.j_max) <= lo) --range.j_max;
  if (range.j_max < range.j_min) range.j_max = range.j_min;
  return range;
}

ScaleRange ScaleRange::within(double lo, double hi) {
  if (!(lo > 0.0) || !(hi >= lo)) throw InputError("scale range requires 0 < lo <= hi");
  ScaleRange range;
  range.j_min = static_cast<int>(std::ceil(-std::log2(hi)));
  while (scale_radius(range.j_min) > hi) ++range.j_min;
  while (scale_radius(range.j_min - 1) <= hi) --range.j_min;
  range.j_max = static_cast<int>(std::floor(-std::log2(lo)));
  while (scale_radius(range.j_max) < lo) --range.j_max;
  while (scale_radius(range.j_max + 1) >= lo) ++range.j_max;
  return range;
}

int annulus_scales(double dist2, const ScaleRange& range, int out[2]) {
  if (!(dist2 > 0.0)) return 0;
  const int guess = static_cast<int>(std::floor(-0.5 * std::log2(dist2)));
  int count = 0;
  for (int j = guess - 1; j <= guess + 1 && count < 2; ++j) {
    if (!range.contains(j)) continue;
    const double outer2 = std::ldexp(1.0, -2 * j);
    const double inner2 = std::ldexp(1.0, -2 * j - 2);
    if (dist2 >= inner2 && dist2 <= outer2) out[count++] = j;
  }
  return count;
}

}  // namespace graphcarve
