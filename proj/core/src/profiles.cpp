#include "spikekit/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace spikekit {

namespace {
constexpr double kPi = std::numbers::pi;

// log(e^u + e^v) without overflow; either argument may be −∞.
double log_add(double u, double v) {
  if (u < v) std::swap(u, v);
  if (u == -std::numeric_limits<double>::infinity()) return u;
  return u + std::log1p(std::exp(v - u));
}

double safe_log(double r) { return r > 0 ? std::log(r) : -std::numeric_limits<double>::infinity(); }
}  // namespace

std::string to_string(Nonlinearity mode) { return mode == Nonlinearity::Sinh ? "sinh" : "exp"; }

bool is_integer_alpha(double alpha) { return alpha >= 0 && std::abs(alpha - std::round(alpha)) < 1e-12; }

double SpikeConfig::abs_log_eps() const { return std::abs(std::log(eps)); }

double SpikeConfig::c(int i) const {
  if (i == 0) return (q_on_boundary ? 4.0 : 8.0) * kPi * (1.0 + alpha);
  return (i > l ? 4.0 : 8.0) * kPi;
}

void SpikeConfig::validate() const {
  if (!(eps > 0) || !(eps < 1)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (!(alpha > -1)) throw std::invalid_argument("alpha must be greater than -1");
  if (is_integer_alpha(alpha)) throw std::invalid_argument("alpha must be non-integer");
  if (m < 0) throw std::invalid_argument("m must be non-negative");
  if (l < 0 || l > m) throw std::invalid_argument("l must lie in [0, m]");
  if (static_cast<int>(xi.size()) != m) throw std::invalid_argument("number of spike points differs from m");
  if (static_cast<int>(b.size()) != m + 1) throw std::invalid_argument("need m+1 signs b_0..b_m");
  for (int s : b)
    if (s != 1 && s != -1) throw std::invalid_argument("signs must be +1 or -1");
  if (mode == Nonlinearity::Exp)
    for (int s : b)
      if (s != 1) throw std::invalid_argument("exp mode requires all signs +1");
  if (!(d > 0)) throw std::invalid_argument("d must be positive");
}

bool MuReport::all_bounds_ok() const {
  return std::all_of(bound_ok.begin(), bound_ok.end(), [](bool v) { return v; });
}

double MuReport::max_residual() const {
  double r = 0.0;
  for (double v : residual) r = std::max(r, std::abs(v));
  return r;
}

std::array<double, 3> NormParams::excluded_p(double alpha) {
  return {1.0 / (1.0 + alpha), 2.0 / (3.0 + 2.0 * alpha), 1.0 / (2.0 * (1.0 + alpha))};
}

NormParams NormParams::defaults(double alpha) {
  NormParams np;
  np.p = 1.5;
  for (double e : excluded_p(alpha))
    if (std::abs(np.p - e) < 1e-6) np.p += 0.01;
  np.beta = 0.4;
  np.sigma = 0.1;
  np.alpha_hat = alpha - std::min(0.5, 0.5 * (alpha + 1.0));
  np.R0 = 10.0;
  return np;
}

void NormParams::validate(double alpha) const {
  if (!(p > 1 && p < 2)) throw std::invalid_argument("p must lie in (1, 2)");
  for (double e : excluded_p(alpha))
    if (std::abs(p - e) < 1e-9) {
      std::ostringstream os;
      os << "p = " << p << " is an excluded value for alpha = " << alpha;
      throw std::invalid_argument(os.str());
    }
  if (!(beta > 0 && beta < 0.5)) throw std::invalid_argument("beta must lie in (0, 1/2)");
  if (!(sigma > 0)) throw std::invalid_argument("sigma must be positive");
  if (!(alpha_hat > -1 && alpha_hat < alpha)) throw std::invalid_argument("alpha_hat must lie in (-1, alpha)");
  if (!(R0 > 0)) throw std::invalid_argument("R0 must be positive");
}

double NormParams::residual_exponent(double alpha) const {
  return std::min({beta, 2.0 * (alpha - alpha_hat), 2.0 / p - 1.0});
}

double NormParams::correction_exponent(double alpha) const { return std::min(2.0 / p - 1.0, 2.0 * (1.0 + alpha)); }

// ---------------------------------------------------------------------------
// Bubbles

double bubble_u0(const Vec2& x, const SpikeConfig& cfg, double mu0) {
  const double a1 = 1.0 + cfg.alpha;
  const double r = (x - cfg.q).norm();
  const double den = log_add(2 * a1 * std::log(cfg.eps * mu0), 2 * a1 * safe_log(r));
  return std::log(8 * a1 * a1) + 2 * a1 * std::log(mu0) + 2 * cfg.alpha * std::log(cfg.eps) - 2 * den;
}

double bubble_ui(const Vec2& x, const SpikeConfig& cfg, int i, double mui) {
  const Vec2& xi = cfg.point(i);
  const double r2 = (x - xi).squaredNorm();
  const double dq = (xi - cfg.q).norm();
  const double delta = cfg.eps * mui;
  return std::log(8.0) + 2 * std::log(mui) - 2 * cfg.alpha * std::log(dq) - 2 * std::log(delta * delta + r2);
}

Vec2 bubble_u0_grad(const Vec2& x, const SpikeConfig& cfg, double mu0) {
  const double a1 = 1.0 + cfg.alpha;
  const Vec2 d = x - cfg.q;
  const double r = d.norm();
  if (r == 0.0) return Vec2::Zero();
  // −4(1+α) r^{2α} (x−q) / (δ^{2(1+α)} + r^{2(1+α)}), δ = εμ_0, in scaled form.
  const double delta = cfg.eps * mu0;
  const double t = std::pow(r / delta, 2 * a1);
  return -4.0 * a1 * (t / (1.0 + t)) / (r * r) * d;
}

Vec2 bubble_ui_grad(const Vec2& x, const SpikeConfig& cfg, int i, double mui) {
  const Vec2 d = x - cfg.point(i);
  const double delta = cfg.eps * mui;
  return -4.0 / (delta * delta + d.squaredNorm()) * d;
}

double bubble_u0_laplacian(const Vec2& x, const SpikeConfig& cfg, double mu0) {
  // −ε²|x−q|^{2α} e^{U_0} = −8(1+α)² δ^{2(1+α)} r^{2α} / (δ^{2(1+α)} + r^{2(1+α)})²
  const double a1 = 1.0 + cfg.alpha;
  const double delta = cfg.eps * mu0;
  const double r = (x - cfg.q).norm();
  const double t = std::pow(r / delta, 2 * a1);
  if (r == 0.0) return cfg.alpha > 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return -8.0 * a1 * a1 * std::pow(r / delta, 2 * cfg.alpha) / (delta * delta * (1.0 + t) * (1.0 + t));
}

double bubble_ui_laplacian(const Vec2& x, const SpikeConfig& cfg, int i, double mui) {
  const double delta = cfg.eps * mui;
  const double s = delta * delta + (x - cfg.point(i)).squaredNorm();
  return -8.0 * delta * delta / (s * s);
}

double bubble(const Vec2& x, const SpikeConfig& cfg, const MuVector& mu, int i) {
  return i == 0 ? bubble_u0(x, cfg, mu.mu[0]) : bubble_ui(x, cfg, i, mu.mu[i]);
}

Vec2 bubble_grad(const Vec2& x, const SpikeConfig& cfg, const MuVector& mu, int i) {
  return i == 0 ? bubble_u0_grad(x, cfg, mu.mu[0]) : bubble_ui_grad(x, cfg, i, mu.mu[i]);
}

double bubble_laplacian(const Vec2& x, const SpikeConfig& cfg, const MuVector& mu, int i) {
  return i == 0 ? bubble_u0_laplacian(x, cfg, mu.mu[0]) : bubble_ui_laplacian(x, cfg, i, mu.mu[i]);
}

KernelValues kernels(const Vec2& z, double alpha) {
  const double r2 = z.squaredNorm();
  const double ra = std::pow(r2, 1.0 + alpha);
  return {(r2 - 1.0) / (r2 + 1.0), z.x() / (1.0 + r2), z.y() / (1.0 + r2), (ra - 1.0) / (ra + 1.0)};
}

std::array<double, 4> standard_integrals(double alpha) {
  const double a1 = 1.0 + alpha;
  return {8 * kPi, 8 * kPi * a1, 8 * kPi * (std::log(8.0) - 2.0),
          8 * kPi * a1 * (std::log(8.0 * a1 * a1) - 2.0)};
}

std::array<double, 4> standard_integrals_quadrature(double alpha) {
  const double a1 = 1.0 + alpha;
  // [0,1] by tanh-sinh, which never samples the endpoint where r^{2α} blows up for α < 0;
  // [1,∞) by exp-sinh.
  boost::math::quadrature::tanh_sinh<double> near;
  boost::math::quadrature::exp_sinh<double> far;
  auto rad = [&](auto f) {
    auto g = [&](double r) {
    const double v = 2 * kPi * r * f(r);
    return std::isfinite(v) ? v : 0.0;  // the far tail underflows
  };
    return near.integrate(g, 0.0, 1.0, 1e-14) + far.integrate(g, 1.0, std::numeric_limits<double>::infinity(), 1e-14);
  };
  auto w1 = [](double r) { return 8.0 / ((1 + r * r) * (1 + r * r)); };
  auto w2 = [&](double r) {
    if (r <= 1) {
      const double t = std::pow(r, 2 * a1);
      return 8 * a1 * a1 * std::pow(r, 2 * alpha) / ((1 + t) * (1 + t));
    }
    const double s = std::pow(r, -2 * a1);  // r^{2α}/(1+r^{2(1+α)})² = r^{−2α−4}/(1+s)²
    return 8 * a1 * a1 * std::pow(r, -2 * alpha - 4) / ((1 + s) * (1 + s));
  };
  // Logs written out so that the far tail gives 0·finite rather than 0·(−∞).
  return {rad(w1), rad(w2), rad([&](double r) { return w1(r) * (std::log(8.0) - 2 * std::log1p(r * r)); }),
          rad([&](double r) {
            return w2(r) * (std::log(8 * a1 * a1) - 2 * std::log1p(std::pow(r, 2 * a1)));
          })};
}

// ---------------------------------------------------------------------------
// Scaling system

std::vector<int> prepare_sources(GreenTable& table, SpikeConfig& cfg) {
  const Mesh& mesh = table.mesh();
  if (cfg.q_on_boundary) cfg.q = mesh.nodes[mesh.nearest_boundary_node(cfg.q)];
  for (int i = cfg.l + 1; i <= cfg.m; ++i) cfg.xi[i - 1] = mesh.nodes[mesh.nearest_boundary_node(cfg.xi[i - 1])];
  std::vector<int> ids(cfg.m + 1);
  for (int i = 0; i <= cfg.m; ++i) ids[i] = table.add(cfg.point(i), cfg.location(i));
  return ids;
}

MuReport solve_mu(const SpikeConfig& cfg, const GreenTable& greens, const MuBounds& bounds) {
  std::vector<int> ids(cfg.m + 1);
  for (int i = 0; i <= cfg.m; ++i) {
    ids[i] = greens.find(cfg.point(i));
    if (ids[i] < 0) {
      std::ostringstream os;
      os << "Green table has no source for point index " << i;
      throw std::invalid_argument(os.str());
    }
  }
  return solve_mu(cfg, greens, ids, bounds);
}

MuReport solve_mu(const SpikeConfig& cfg, const GreenTable& greens, const std::vector<int>& ids,
                  const MuBounds& bounds) {
  cfg.validate();
  const int m = cfg.m;
  const double a1 = 1.0 + cfg.alpha;
  const double le = std::log(cfg.eps);

  // Right-hand sides of the scaling system.
  std::vector<double> rhs(m + 1);
  rhs[0] = cfg.c(0) * greens.robin(ids[0]);
  for (int i = 1; i <= m; ++i) rhs[0] += cfg.b[0] * cfg.b[i] * cfg.c(i) * greens.G(cfg.q, ids[i]);
  for (int j = 1; j <= m; ++j) {
    const Vec2& xj = cfg.point(j);
    rhs[j] = cfg.c(j) * greens.robin(ids[j]) + cfg.b[j] * cfg.b[0] * cfg.c(0) * greens.G(xj, ids[0]);
    for (int i = 1; i <= m; ++i)
      if (i != j) rhs[j] += cfg.b[j] * cfg.b[i] * cfg.c(i) * greens.G(xj, ids[i]);
  }
  for (int i = 0; i <= m; ++i)
    if (!std::isfinite(rhs[i])) {
      std::ostringstream os;
      os << "non-finite Green value in scaling equation " << i;
      throw std::runtime_error(os.str());
    }

  MuReport rep;
  rep.mu.mu.resize(m + 1);
  rep.mu.mu[0] = std::exp((rhs[0] - std::log(8 * a1 * a1) - 2 * cfg.alpha * le) / (2 * a1));
  for (int j = 1; j <= m; ++j) {
    const double dq = (cfg.point(j) - cfg.q).norm();
    rep.mu.mu[j] = std::exp(0.5 * (rhs[j] - std::log(8.0) + 2 * cfg.alpha * std::log(dq)));
  }

  // Back-substitution.
  rep.residual.resize(m + 1);
  {
    const double lhs = std::log(8 * a1 * a1 * std::pow(rep.mu.mu[0], 2 * a1) * std::pow(cfg.eps, 2 * cfg.alpha));
    rep.residual[0] = (lhs - rhs[0]) / std::max(1.0, std::abs(rhs[0]));
  }
  for (int j = 1; j <= m; ++j) {
    const double dq = (cfg.point(j) - cfg.q).norm();
    const double lhs = std::log(8 * rep.mu.mu[j] * rep.mu.mu[j] / std::pow(dq, 2 * cfg.alpha));
    rep.residual[j] = (lhs - rhs[j]) / std::max(1.0, std::abs(rhs[j]));
  }

  // Order-of-magnitude bounds.
  const double L = cfg.abs_log_eps();
  const double c2 = bounds.c2 < 0 ? cfg.kappa() + 2 : bounds.c2;
  const double c5 = bounds.c5 < 0 ? cfg.kappa() + 2 : bounds.c5;
  for (int j = 0; j <= m; ++j) {
    double v, lo, hi;
    if (j == 0) {
      v = std::pow(rep.mu.mu[0], 2 * a1) * std::pow(cfg.eps, 2 * cfg.alpha);
      lo = bounds.c0 / std::pow(L, c2);
      hi = bounds.c1 * std::pow(L, c2);
    } else {
      const double dq = (cfg.point(j) - cfg.q).norm();
      v = rep.mu.mu[j] * rep.mu.mu[j] / std::pow(dq, 2 * cfg.alpha);
      lo = bounds.c3 / std::pow(L, c5);
      hi = bounds.c4 * std::pow(L, c5);
    }
    const bool ok = v >= lo && v <= hi;
    rep.bound_value.push_back(v);
    rep.bound_lower.push_back(lo);
    rep.bound_upper.push_back(hi);
    rep.bound_ok.push_back(ok);
    if (!ok) {
      std::ostringstream os;
      os << "scale bound for index " << j << " outside [" << lo << ", " << hi << "]: " << v;
      rep.warnings.push_back(os.str());
    }
    if (!(rep.mu.mu[j] > 0) || !std::isfinite(rep.mu.mu[j])) {
      std::ostringstream os;
      os << "scale mu_" << j << " is not a positive finite number";
      throw std::runtime_error(os.str());
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Admissible set

double AdmissibilityReport::min_relative_margin() const {
  double r = std::numeric_limits<double>::infinity();
  for (const auto& c : margins) r = std::min(r, c.margin / c.threshold);
  return r;
}

AdmissibilityReport check_admissible(const SpikeConfig& cfg, const DomainSpec& domain) {
  AdmissibilityReport rep;
  const double thr = std::pow(cfg.abs_log_eps(), -cfg.kappa());
  auto add = [&](std::string name, double value, double threshold, double margin) {
    rep.margins.push_back({std::move(name), value, threshold, margin});
    if (!(margin > 0)) rep.admissible = false;
  };
  for (int i = 1; i <= cfg.m; ++i) {
    const Vec2& x = cfg.point(i);
    const std::string tag = "xi_" + std::to_string(i);
    if (i <= cfg.l) {
      const double db = domain.contains(x) ? domain.distance_to_boundary(x) : -domain.distance_to_boundary(x);
      add("boundary_distance(" + tag + ")", db, thr, db - thr);
    }
    const double dq = (x - cfg.q).norm();
    add("q_separation(" + tag + ")", dq, thr, dq - thr);
    add("ball_Bd(" + tag + ")", dq, cfg.d, cfg.d - dq);
  }
  for (int i = 1; i <= cfg.m; ++i)
    for (int j = i + 1; j <= cfg.m; ++j) {
      const double dij = (cfg.point(i) - cfg.point(j)).norm();
      add("pair_separation(xi_" + std::to_string(i) + ",xi_" + std::to_string(j) + ")", dij, thr, dij - thr);
    }
  return rep;
}

}  // namespace spikekit
