#include "spikekit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace spikekit {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double t) {
  t = std::fmod(t, kTwoPi);
  if (t < 0) t += kTwoPi;
  return t;
}
}  // namespace

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::Disk: return "disk";
    case DomainKind::Ellipse: return "ellipse";
    case DomainKind::Star: return "star";
  }
  return "unknown";
}

DomainSpec DomainSpec::unit_disk() { return disk(Vec2::Zero(), 1.0, Vec2::Zero()); }

DomainSpec DomainSpec::disk(const Vec2& center, double radius, const Vec2& pole) {
  DomainSpec d;
  d.kind = DomainKind::Disk;
  d.center = center;
  d.pole = pole;
  d.radius = radius;
  d.validate();
  return d;
}

DomainSpec DomainSpec::ellipse(double ax, double ay, const Vec2& center) {
  DomainSpec d;
  d.kind = DomainKind::Ellipse;
  d.center = center;
  d.pole = center;
  d.ax = ax;
  d.ay = ay;
  d.validate();
  return d;
}

DomainSpec DomainSpec::star(std::vector<double> coeffs, const Vec2& center) {
  DomainSpec d;
  d.kind = DomainKind::Star;
  d.center = center;
  d.pole = center;
  d.fourier = std::move(coeffs);
  d.validate();
  return d;
}

DomainSpec::RadialJet DomainSpec::radius_jet(double theta) const {
  switch (kind) {
    case DomainKind::Disk: {
      const Vec2 dv = pole - center;
      const double c = std::cos(theta), s = std::sin(theta);
      const double sp = dv.x() * c + dv.y() * s;      // d·e
      const double spp = -dv.x() * s + dv.y() * c;    // d·e⊥
      const double disc = sp * sp - dv.squaredNorm() + radius * radius;
      const double root = std::sqrt(disc);
      const double rho = -sp + root;
      const double drho = -spp + sp * spp / root;
      const double ddrho = sp + (spp * spp - sp * sp) / root - (sp * spp) * (sp * spp) / (disc * root);
      return {rho, drho, ddrho};
    }
    case DomainKind::Ellipse: {
      const double ia = 1.0 / (ax * ax), ib = 1.0 / (ay * ay);
      const double c = std::cos(theta), s = std::sin(theta);
      const double g = c * c * ia + s * s * ib;
      const double g1 = std::sin(2 * theta) * (ib - ia);
      const double g2 = 2 * std::cos(2 * theta) * (ib - ia);
      const double rho = 1.0 / std::sqrt(g);
      const double drho = -0.5 * g1 * std::pow(g, -1.5);
      const double ddrho = 0.75 * g1 * g1 * std::pow(g, -2.5) - 0.5 * g2 * std::pow(g, -1.5);
      return {rho, drho, ddrho};
    }
    case DomainKind::Star: {
      double rho = fourier.empty() ? 0.0 : fourier[0], drho = 0.0, ddrho = 0.0;
      const std::size_t nmodes = fourier.empty() ? 0 : (fourier.size() - 1 + 1) / 2;
      for (std::size_t k = 1; k <= nmodes; ++k) {
        const double a = fourier[2 * k - 1];
        const double b = 2 * k < fourier.size() ? fourier[2 * k] : 0.0;
        const double kk = static_cast<double>(k);
        const double c = std::cos(kk * theta), s = std::sin(kk * theta);
        rho += a * c + b * s;
        drho += kk * (-a * s + b * c);
        ddrho += -kk * kk * (a * c + b * s);
      }
      return {rho, drho, ddrho};
    }
  }
  throw std::logic_error("unknown domain kind");
}

Vec2 DomainSpec::boundary_point(double theta) const {
  return pole + rho(theta) * Vec2(std::cos(theta), std::sin(theta));
}

Vec2 DomainSpec::boundary_tangent(double theta) const {
  const auto j = radius_jet(theta);
  const Vec2 e(std::cos(theta), std::sin(theta)), ep(-std::sin(theta), std::cos(theta));
  return j.drho * e + j.rho * ep;
}

double DomainSpec::curvature(double theta) const {
  const auto j = radius_jet(theta);
  const double num = j.rho * j.rho + 2 * j.drho * j.drho - j.rho * j.ddrho;
  return num / std::pow(j.rho * j.rho + j.drho * j.drho, 1.5);
}

double DomainSpec::angle_of(const Vec2& x) const {
  const Vec2 d = x - pole;
  return wrap_angle(std::atan2(d.y(), d.x()));
}

double DomainSpec::normalized_radius(const Vec2& x) const {
  const double r = (x - pole).norm();
  if (r == 0.0) return 0.0;
  return r / rho(angle_of(x));
}

bool DomainSpec::contains(const Vec2& x, double tol) const { return normalized_radius(x) <= 1.0 + tol; }

Vec2 DomainSpec::nearest_boundary_point(const Vec2& x, double* theta_out) const {
  constexpr int kSamples = 720;
  double best_t = 0.0, best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kSamples; ++k) {
    const double t = kTwoPi * k / kSamples;
    const double d2 = (boundary_point(t) - x).squaredNorm();
    if (d2 < best) {
      best = d2;
      best_t = t;
    }
  }
  // Newton on the stationarity condition (X(t) − x)·X'(t) = 0.
  double t = best_t;
  for (int it = 0; it < 50; ++it) {
    const auto j = radius_jet(t);
    const Vec2 e(std::cos(t), std::sin(t)), ep(-std::sin(t), std::cos(t));
    const Vec2 X = pole + j.rho * e;
    const Vec2 X1 = j.drho * e + j.rho * ep;
    const Vec2 X2 = (j.ddrho - j.rho) * e + 2 * j.drho * ep;
    const double f = (X - x).dot(X1);
    const double fp = X1.squaredNorm() + (X - x).dot(X2);
    if (fp <= 0) break;
    const double dt = f / fp;
    t -= std::clamp(dt, -0.05, 0.05);
    if (std::abs(dt) < 1e-15) break;
  }
  t = wrap_angle(t);
  if ((boundary_point(t) - x).squaredNorm() > best) t = best_t;
  if (theta_out) *theta_out = t;
  return boundary_point(t);
}

double DomainSpec::distance_to_boundary(const Vec2& x) const { return (nearest_boundary_point(x) - x).norm(); }

double DomainSpec::area() const {
  switch (kind) {
    case DomainKind::Disk: return std::numbers::pi * radius * radius;
    case DomainKind::Ellipse: return std::numbers::pi * ax * ay;
    case DomainKind::Star: {
      // Trapezoid rule is exact for the trigonometric polynomial ρ².
      const int n = 4 * static_cast<int>(fourier.size()) + 16;
      double sum = 0.0;
      for (int k = 0; k < n; ++k) {
        const double r = rho(kTwoPi * k / n);
        sum += r * r;
      }
      return 0.5 * sum * kTwoPi / n;
    }
  }
  return 0.0;
}

void DomainSpec::validate() const {
  switch (kind) {
    case DomainKind::Disk:
      if (!(radius > 0)) throw std::invalid_argument("disk radius must be positive");
      if ((pole - center).norm() >= radius) throw std::invalid_argument("disk pole must lie inside the disk");
      break;
    case DomainKind::Ellipse:
      if (!(ax > 0) || !(ay > 0)) throw std::invalid_argument("ellipse semi-axes must be positive");
      break;
    case DomainKind::Star:
      if (fourier.empty()) throw std::invalid_argument("star domain needs at least one Fourier coefficient");
      break;
  }
  constexpr int kCheck = 2048;
  for (int k = 0; k < kCheck; ++k) {
    const double t = kTwoPi * k / kCheck;
    const double r = rho(t);
    if (!(r > 0) || !std::isfinite(r)) {
      std::ostringstream os;
      os << to_string(kind) << " radius function is not positive at theta=" << t << " (rho=" << r << ")";
      throw std::invalid_argument(os.str());
    }
  }
}

Vec2 boundary_normal(const DomainSpec& domain, double theta) {
  const auto j = domain.radius_jet(theta);
  const Vec2 e(std::cos(theta), std::sin(theta)), ep(-std::sin(theta), std::cos(theta));
  return (j.rho * e - j.drho * ep).normalized();
}

// ---------------------------------------------------------------------------
// Mesh

int Mesh::node_index(int ring, int j) const {
  if (ring == 0) return 0;
  j %= nt;
  if (j < 0) j += nt;
  return 1 + (ring - 1) * nt + j;
}

int Mesh::ring_of(int node) const { return node == 0 ? 0 : 1 + (node - 1) / nt; }

double Mesh::radial_map(double sv) const {
  if (grading <= 0) return sv;
  return std::sinh(grading * sv) / std::sinh(grading);
}

double Mesh::radial_map_derivative(double sv) const {
  if (grading <= 0) return 1.0;
  return grading * std::cosh(grading * sv) / std::sinh(grading);
}

double Mesh::radial_map_inverse(double rhat) const {
  if (grading <= 0) return rhat;
  return std::asinh(rhat * std::sinh(grading)) / grading;
}

Vec2 Mesh::map(double sv, double th) const {
  return domain.pole + radial_map(sv) * domain.rho(th) * Vec2(std::cos(th), std::sin(th));
}

double Mesh::total_area() const {
  double a = 0.0;
  for (double c : cell_area) a += c;
  return a;
}

int Mesh::nearest_node(const Vec2& x) const {
  // Candidates from the computational coordinates, then a local search.
  const double sh = std::min(1.0, domain.normalized_radius(x));
  const double sv = radial_map_inverse(sh);
  const int ring = std::clamp(static_cast<int>(std::lround(sv * nr)), 0, nr);
  const double th = domain.angle_of(x);
  const int jc = static_cast<int>(std::lround(th / (kTwoPi / nt)));
  int best = 0;
  double bd = (nodes[0] - x).squaredNorm();
  for (int r = std::max(1, ring - 2); r <= std::min(nr, ring + 2); ++r)
    for (int dj = -2; dj <= 2; ++dj) {
      const int id = node_index(r, jc + dj);
      const double d = (nodes[id] - x).squaredNorm();
      if (d < bd) {
        bd = d;
        best = id;
      }
    }
  return best;
}

int Mesh::nearest_boundary_node(const Vec2& x) const {
  int best = boundary_nodes.front();
  double bd = std::numeric_limits<double>::infinity();
  for (int id : boundary_nodes) {
    const double d = (nodes[id] - x).squaredNorm();
    if (d < bd) {
      bd = d;
      best = id;
    }
  }
  return best;
}

std::vector<std::vector<int>> Mesh::adjacency() const {
  std::vector<std::vector<int>> adj(nodes.size());
  for (const auto& t : triangles)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (a != b) adj[t[a]].push_back(t[b]);
  for (auto& v : adj) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return adj;
}

double Mesh::local_spacing(const Vec2& x) const {
  const int id = nearest_node(x);
  const int ring = ring_of(id);
  const double sv = ring / static_cast<double>(nr);
  const double th = id == 0 ? 0.0 : theta[id];
  const double rho = domain.rho(th);
  const double hr = radial_map_derivative(sv) * rho / nr;
  const double ht = std::max(radial_map(sv), radial_map(1.0 / nr)) * rho * kTwoPi / nt;
  return std::max(hr, ht);
}

int Mesh::locate(const Vec2& x) const {
  const double sh = domain.normalized_radius(x);
  if (sh > 1.0 + 1e-12) return -1;
  const double sv = radial_map_inverse(std::min(sh, 1.0));
  const int ring = std::clamp(static_cast<int>(std::floor(sv * nr)), 0, nr - 1);
  const double th = domain.angle_of(x);
  const int jc = static_cast<int>(std::floor(th / (kTwoPi / nt)));
  auto inside = [&](int t) {
    const auto& T = triangles[t];
    const Vec2 &a = nodes[T[0]], &b = nodes[T[1]], &c = nodes[T[2]];
    auto cr = [](const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); };
    const double tol = -1e-12 * tri_area[t];
    return cr(b - a, x - a) >= tol && cr(c - b, x - b) >= tol && cr(a - c, x - c) >= tol;
  };
  // Triangles of ring band r: center fan for r = 0 (nt triangles), then 2 nt per band.
  for (int r = std::max(0, ring - 1); r <= std::min(nr - 1, ring + 1); ++r)
    for (int dj = -2; dj <= 2; ++dj) {
      int j = (jc + dj) % nt;
      if (j < 0) j += nt;
      if (r == 0) {
        if (inside(j)) return j;
      } else {
        const int base = nt + 2 * ((r - 1) * nt + j);
        if (inside(base)) return base;
        if (inside(base + 1)) return base + 1;
      }
    }
  for (int t = 0; t < static_cast<int>(triangles.size()); ++t)
    if (inside(t)) return t;
  return -1;
}

Mesh build_mesh(const DomainSpec& domain, int nr, int nt, double grading) {
  if (nr < 16) throw std::invalid_argument("mesh needs N_r >= 16");
  if (nt < 32) throw std::invalid_argument("mesh needs N_theta >= 32");
  if (nt % 2 != 0) throw std::invalid_argument("mesh needs an even N_theta");
  if (grading < 0) throw std::invalid_argument("mesh grading must be non-negative");
  domain.validate();

  Mesh m;
  m.domain = domain;
  m.nr = nr;
  m.nt = nt;
  m.grading = grading;
  const int n = 1 + nr * nt;
  m.nodes.resize(n);
  m.s.resize(n);
  m.theta.resize(n);
  m.metric.resize(n);

  m.nodes[0] = domain.pole;
  m.s[0] = 0.0;
  m.theta[0] = 0.0;
  {
    Mat2 J;
    J.col(0) = m.radial_map_derivative(0.0) * domain.rho(0.0) * Vec2(1.0, 0.0);
    J.col(1) = Vec2::Zero();
    m.metric[0] = J;
  }
  for (int i = 1; i <= nr; ++i) {
    const double sv = static_cast<double>(i) / nr;
    const double rh = i == nr ? 1.0 : m.radial_map(sv);
    const double drh = m.radial_map_derivative(sv);
    for (int j = 0; j < nt; ++j) {
      const double th = kTwoPi * j / nt;
      const auto jet = domain.radius_jet(th);
      const Vec2 e(std::cos(th), std::sin(th)), ep(-std::sin(th), std::cos(th));
      const int id = m.node_index(i, j);
      m.nodes[id] = domain.pole + rh * jet.rho * e;
      m.s[id] = sv;
      m.theta[id] = th;
      Mat2 J;
      J.col(0) = drh * jet.rho * e;
      J.col(1) = rh * (jet.drho * e + jet.rho * ep);
      if (!(J.determinant() > 0) || !J.allFinite()) {
        std::ostringstream os;
        os << "degenerate polar map at node " << id << " (ring " << i << ", column " << j << ")";
        throw std::runtime_error(os.str());
      }
      m.metric[id] = J;
    }
  }

  m.triangles.reserve(static_cast<std::size_t>(nt) * (2 * nr - 1));
  for (int j = 0; j < nt; ++j) m.triangles.push_back({0, m.node_index(1, j), m.node_index(1, j + 1)});
  for (int i = 1; i < nr; ++i)
    for (int j = 0; j < nt; ++j) {
      const int a = m.node_index(i, j), b = m.node_index(i + 1, j);
      const int c = m.node_index(i + 1, j + 1), d = m.node_index(i, j + 1);
      m.triangles.push_back({a, b, c});
      m.triangles.push_back({a, c, d});
    }

  m.tri_area.resize(m.triangles.size());
  m.cell_area.assign(n, 0.0);
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& T = m.triangles[t];
    const Vec2 u = m.nodes[T[1]] - m.nodes[T[0]], v = m.nodes[T[2]] - m.nodes[T[0]];
    const double area = 0.5 * (u.x() * v.y() - u.y() * v.x());
    if (!(area > 0)) {
      std::ostringstream os;
      os << "non-positive triangle area at node " << T[0];
      throw std::runtime_error(os.str());
    }
    m.tri_area[t] = area;
    for (int k = 0; k < 3; ++k) m.cell_area[T[k]] += area / 3.0;
  }

  m.boundary_nodes.resize(nt);
  m.boundary_normals.resize(nt);
  for (int j = 0; j < nt; ++j) {
    m.boundary_nodes[j] = m.node_index(nr, j);
    m.boundary_normals[j] = boundary_normal(domain, kTwoPi * j / nt);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Boundary straightening

double StraightenMap::solve_param(double t) const {
  // Find the boundary angle θ whose rotated first coordinate equals t.
  double th = theta_xi;
  const double speed = domain.boundary_tangent(theta_xi).norm();
  th += t / speed * ((A * domain.boundary_tangent(theta_xi)).x() > 0 ? 1.0 : -1.0);
  for (int it = 0; it < 60; ++it) {
    const Vec2 z = A * (domain.boundary_point(th) - xi);
    const Vec2 dz = A * domain.boundary_tangent(th);
    const double f = z.x() - t;
    const double step = f / dz.x();
    th -= step;
    if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(th))) break;
  }
  return th;
}

double StraightenMap::G(double t) const {
  if (t == 0.0) return 0.0;
  const double th = solve_param(t);
  return (A * (domain.boundary_point(th) - xi)).y();
}

double StraightenMap::dG(double t) const {
  const double th = t == 0.0 ? theta_xi : solve_param(t);
  const Vec2 dz = A * domain.boundary_tangent(th);
  return dz.y() / dz.x();
}

Vec2 StraightenMap::apply_local(const Vec2& z) const {
  const double g = G(z.x());
  const double gp = dG(z.x());
  const double f2 = z.y() - g;
  return Vec2(z.x() + f2 * gp / (1.0 + gp * gp), f2);
}

Mat2 StraightenMap::jacobian_local(const Vec2& z) const {
  const double h = 1e-6 * std::max(delta2, 1e-3);
  Mat2 J;
  J.col(0) = (apply_local(z + Vec2(h, 0)) - apply_local(z - Vec2(h, 0))) / (2 * h);
  J.col(1) = (apply_local(z + Vec2(0, h)) - apply_local(z - Vec2(0, h))) / (2 * h);
  return J;
}

StraightenMap straighten(const DomainSpec& domain, const Vec2& xi) {
  double th = 0.0;
  const Vec2 p = domain.nearest_boundary_point(xi, &th);
  const double dist = (p - xi).norm();
  if (dist > 1e-10) {
    std::ostringstream os;
    os << "straighten: point is not on the boundary (distance " << dist << ")";
    throw std::invalid_argument(os.str());
  }
  StraightenMap sm;
  sm.domain = domain;
  sm.xi = xi;
  sm.theta_xi = th;
  const Vec2 n = boundary_normal(domain, th);
  // Rotation R with R n = (0, -1): rows are (−n_y, n_x) and (−n_x, −n_y).
  sm.A << -n.y(), n.x(), -n.x(), -n.y();
  const double kappa = std::abs(domain.curvature(th));
  const double diam_guess = 2.0 * domain.rho(th);
  sm.delta2 = kappa > 1e-12 ? 0.2 / kappa : 0.2 * diam_guess;
  return sm;
}

double default_d(const DomainSpec& domain, const Vec2& q, bool boundary_q) {
  if (!boundary_q) return domain.distance_to_boundary(q) / 20.0;
  return straighten(domain, q).delta2 / 20.0;
}

}  // namespace spikekit
