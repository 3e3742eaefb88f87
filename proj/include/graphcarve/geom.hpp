#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <optional>
#include <variant>

namespace graphcarve {

/// Ambient dimensions above this are rejected; hot loops use fixed stack buffers.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A k-dimensional linear subspace of R^d, 1 <= k < d, stored as an orthonormal frame.
///
/// Frames are canonicalized with pivoted Gram-Schmidt on construction, so the same
/// spanning set always produces the same frame bit-for-bit.
class Subspace {
 public:
  /// Spans the columns of `spanning` (d x k). Throws InputError if the columns are
  /// rank deficient, if k >= d, or if d exceeds kMaxDim.
  explicit Subspace(const Mat& spanning);

  /// span(e_first, ..., e_{first+count-1}).
  static Subspace coordinate(int d, int first, int count);
  /// The base plane R^n = span(e_1..e_n) of the splitting R^d = R^n x R^{d-n}.
  static Subspace base_plane(int d, int n) { return coordinate(d, 0, n); }
  /// The vertical axis R^{d-n}; the (theta, M)-property uses cones around it.
  static Subspace vertical_axis(int d, int n) { return coordinate(d, n, d - n); }
  static Subspace line(const Vec& direction);

  int ambient_dim() const { return static_cast<int>(frame_.rows()); }
  int dim() const { return static_cast<int>(frame_.cols()); }
  const Mat& frame() const { return frame_; }
  const Mat& projector() const { return projector_; }

  Subspace orthogonal_complement() const;

 private:
  struct Canonical {};
  Subspace(Canonical, Mat frame);

  Mat frame_;
  Mat projector_;
};

/// Orthogonal projection of x onto V, expressed in ambient coordinates.
Vec project(const Subspace& v, const Vec& x);
/// Coordinates of the projection in V's frame (length dim(V)).
Vec frame_coordinates(const Subspace& v, const Vec& x);

/// Operator norm of pi_V - pi_W. Both subspaces must share (d, k).
double grassmann_distance(const Subspace& v, const Subspace& w);

/// Orthogonal d x d matrix whose first k rows are the frame of V transposed; applying
/// it maps V onto span(e_1..e_k).
Mat aligning_rotation(const Subspace& v);

enum class Openness { Closed, Interior };

struct Radii {
  double outer;
  double inner;
};

/// A cone X(x, V, a) (two-sided, axis subspace) or X+(x, w, a) (one-sided, unit
/// direction), optionally truncated to the annulus B(x, R) \ U(x, r).
class ConeSpec {
 public:
  static ConeSpec two_sided(Vec vertex, Subspace axis, double aperture,
                            std::optional<Radii> radii = std::nullopt,
                            Openness openness = Openness::Closed);
  static ConeSpec one_sided(Vec vertex, Vec direction, double aperture,
                            std::optional<Radii> radii = std::nullopt,
                            Openness openness = Openness::Closed);

  const Vec& vertex() const { return vertex_; }
  bool is_one_sided() const { return std::holds_alternative<Vec>(axis_); }
  const Subspace& axis_subspace() const { return std::get<Subspace>(axis_); }
  const Vec& direction() const { return std::get<Vec>(axis_); }
  double aperture() const { return aperture_; }
  const std::optional<Radii>& radii() const { return radii_; }
  Openness openness() const { return openness_; }

 private:
  ConeSpec(Vec vertex, std::variant<Subspace, Vec> axis, double aperture,
           std::optional<Radii> radii, Openness openness);

  Vec vertex_;
  std::variant<Subspace, Vec> axis_;
  double aperture_;
  std::optional<Radii> radii_;
  Openness openness_;
};

bool cone_contains(const ConeSpec& cone, const Vec& y);

/// Vertex-free part of a cone test: the aperture condition and, for one-sided cones,
/// the half-space condition. Every membership decision in the library goes through
/// this one routine so that grid and brute-force paths agree bit-for-bit.
class ConeKernel {
 public:
  static ConeKernel two_sided(const Subspace& axis, double aperture);
  static ConeKernel one_sided(const Vec& direction, double aperture);

  int ambient_dim() const { return d_; }
  double aperture() const { return aperture_; }
  bool is_one_sided() const { return one_sided_; }

  /// `delta` = y - x (length d), `dist2` = |delta|^2.
  bool admits(const double* delta, double dist2, Openness openness) const;

  /// Offsets lo/hi (length d) such that every member of the cone truncated at radius
  /// `outer` lies in vertex + [lo, hi].
  void bounding_box(double outer, double* lo, double* hi) const;

  /// The cone with the opposite orientation: y is in X+(x, w) iff x is in X+(y, -w).
  ConeKernel reversed() const;

 private:
  ConeKernel() = default;

  int d_ = 0;
  int k_ = 0;  // axis dimension; 1 for one-sided
  bool one_sided_ = false;
  double aperture_ = 0.0;
  double aperture2_ = 0.0;
  std::array<double, kMaxDim * kMaxDim> frame_{};  // column-major d x k
  std::array<double, kMaxDim> perp_halfwidth_{};   // sqrt of diag(pi_{V^perp})
  std::array<double, kMaxDim> axis_halfwidth_{};   // sqrt of diag(pi_V) (two-sided)
};

/// Closed or open annulus test on squared distances: r^2 <= dist2 <= R^2.
bool in_annulus(double dist2, double outer, double inner, Openness openness);

/// A contiguous range of dyadic scale indices j, radius 2^-j.
struct ScaleRange {
  int j_min = 0;
  int j_max = -1;

  int size() const { return j_max >= j_min ? j_max - j_min + 1 : 0; }
  bool empty() const { return size() == 0; }
  bool contains(int j) const { return j >= j_min && j <= j_max; }

  /// Scales whose closed annuli [2^-j-1, 2^-j] together cover every distance in [lo, hi].
  static ScaleRange covering(double lo, double hi);
  /// Scales with lo <= 2^-j <= hi.
  static ScaleRange within(double lo, double hi);
};

inline double scale_radius(int j) { return std::ldexp(1.0, -j); }

/// Scales j in `range` whose closed annulus [2^-j-1, 2^-j] contains a point at squared
/// distance dist2. At most two (exactly on a dyadic radius). Returns the count written.
int annulus_scales(double dist2, const ScaleRange& range, int out[2]);

}  // namespace graphcarve
