#include "graphcarve/graph_extract.hpp"

#include "graphcarve/error.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace graphcarve {

GraphModel certify_graph(const WeightedCloud& c, const Subset& e3, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw InputError("certify_graph: theta must lie in (0, 1]");
  GraphModel g;
  g.d = c.ambient_dim();
  g.n = c.intrinsic_dim();
  g.theta = theta;
  g.bound = std::sqrt(1.0 - theta * theta) / theta;
  g.points = e3;
  const std::size_t count = e3.size();
  const int n = g.n;
  g.sites.resize(n, static_cast<Eigen::Index>(count));
  g.values.resize(g.d - n, static_cast<Eigen::Index>(count));
  for (std::size_t a = 0; a < count; ++a) {
    const double* x = c.point(e3[a]);
    for (int i = 0; i < g.d; ++i) {
      if (i < n) {
        g.sites(i, static_cast<Eigen::Index>(a)) = x[i];
      } else {
        g.values(i - n, static_cast<Eigen::Index>(a)) = x[i];
      }
    }
  }
  const double theta2 = theta * theta;
  double worst = 0.0;
  for (std::size_t a = 0; a < count; ++a) {
    for (std::size_t b = a + 1; b < count; ++b) {
      const double base2 = (g.sites.col(static_cast<Eigen::Index>(a)) - g.sites.col(static_cast<Eigen::Index>(b))).squaredNorm();
      const double vert2 =
          (g.values.col(static_cast<Eigen::Index>(a)) - g.values.col(static_cast<Eigen::Index>(b))).squaredNorm();
      if (base2 < theta2 * (base2 + vert2) || base2 == 0.0) {
        std::ostringstream msg;
        msg << "certify_graph: not a graph, pair (" << e3[a] << ", " << e3[b] << ") has |pi(x-y)| = "
            << std::sqrt(base2) << " < theta |x-y| = " << theta * std::sqrt(base2 + vert2);
        throw InputError(msg.str());
      }
      worst = std::max(worst, vert2 / base2);
    }
  }
  g.lipschitz = std::sqrt(worst);
  if (g.lipschitz > g.bound * (1.0 + 1e-12)) {
    throw InvariantViolation("certify_graph: slope exceeds sqrt(1 - theta^2) / theta");
  }
  for (std::size_t a = 0; a < count; ++a) {
    const auto col = g.sites.col(static_cast<Eigen::Index>(a));
    g.site_lookup.emplace(std::vector<double>(col.data(), col.data() + n), a);
  }
  return g;
}

Vec extend_mcshane(const GraphModel& g, const Vec& query) {
  if (g.size() == 0) throw InputError("extend_mcshane: empty sample map");
  if (query.size() != g.n) throw InputError("extend_mcshane: query dimension mismatch");
  if (auto it = g.site_lookup.find(std::vector<double>(query.data(), query.data() + g.n)); it != g.site_lookup.end()) {
    return g.values.col(static_cast<Eigen::Index>(it->second));
  }
  const int m = g.d - g.n;
  Vec upper = Vec::Constant(m, std::numeric_limits<double>::infinity());
  Vec lower = Vec::Constant(m, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double reach = g.lipschitz * (g.sites.col(static_cast<Eigen::Index>(i)) - query).norm();
    for (int q = 0; q < m; ++q) {
      const double f = g.values(q, static_cast<Eigen::Index>(i));
      upper[q] = std::min(upper[q], f + reach);
      lower[q] = std::max(lower[q], f - reach);
    }
  }
  return (upper + lower) / 2.0;
}

ContainmentReport containment_report(const WeightedCloud& c, const Subset& e1, const GraphModel& g, double tol) {
  if (!(tol >= 0.0)) throw InputError("containment_report: tol must be nonnegative");
  ContainmentReport rep;
  rep.tol = tol;
  const int n = g.n;
  for (std::size_t p : e1) {
    const Eigen::Map<const Vec> x(c.point(p), c.ambient_dim());
    rep.total_mass += c.weight(p);
    const Vec a = extend_mcshane(g, x.head(n));
    if ((x.tail(g.d - n) - a).norm() <= tol) rep.contained_mass += c.weight(p);
  }
  rep.fraction = rep.total_mass > 0.0 ? rep.contained_mass / rep.total_mass : 0.0;
  return rep;
}

std::string graph_grid_csv(const GraphModel& g, int per_axis) {
  std::ostringstream out;
  out.precision(17);
  for (int i = 0; i < g.n; ++i) out << (i ? "," : "") << "t" << i + 1;
  for (int q = 0; q < g.d - g.n; ++q) out << ",A" << q + 1;
  out << "\n";
  if (g.size() == 0 || per_axis < 1) return out.str();
  const Vec lo = g.sites.rowwise().minCoeff();
  const Vec hi = g.sites.rowwise().maxCoeff();
  std::vector<int> idx(static_cast<std::size_t>(g.n), 0);
  while (true) {
    Vec t(g.n);
    for (int i = 0; i < g.n; ++i) {
      const double f = per_axis == 1 ? 0.5 : static_cast<double>(idx[static_cast<std::size_t>(i)]) / (per_axis - 1);
      t[i] = lo[i] + f * (hi[i] - lo[i]);
    }
    const Vec a = extend_mcshane(g, t);
    for (int i = 0; i < g.n; ++i) out << (i ? "," : "") << t[i];
    for (int q = 0; q < a.size(); ++q) out << "," << a[q];
    out << "\n";
    int i = 0;
    for (; i < g.n; ++i) {
      if (++idx[static_cast<std::size_t>(i)] < per_axis) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
    if (i == g.n) break;
  }
  return out.str();
}

}  // namespace graphcarve
