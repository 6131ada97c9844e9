#include "spikekit/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "spikekit/interp.hpp"
#include "spikekit/quadrature.hpp"

namespace spikekit {

namespace {

constexpr double kExpClamp = 700.0;

// Smooth step: 1 on [0, ½], 0 on [1, ∞).
double cutoff(double t) {
  if (t <= 0.5) return 1.0;
  if (t >= 1.0) return 0.0;
  const double u = 2.0 * (t - 0.5);
  const double f0 = std::exp(-1.0 / u), f1 = std::exp(-1.0 / (1.0 - u));
  return f1 / (f0 + f1);
}

class Integrand {
 public:
  explicit Integrand(const ApproxField& field) : f_(field) {
    for (const auto& H : field.corrections()) interp_.emplace_back(field.mesh(), H);
  }

  // Adds the three energy densities at x, multiplied by `w`.
  void accumulate(const Vec2& x, double w, EnergyQuadrature& out) const {
    const auto& cfg = f_.cfg();
    double U = 0.0;
    Vec2 g = Vec2::Zero();
    for (int i = 0; i <= cfg.m; ++i) {
      const auto [h, dh] = interp_[i].eval(x);
      U += cfg.b[i] * (bubble(x, cfg, f_.mu(), i) + h);
      g += cfg.b[i] * (bubble_grad(x, cfg, f_.mu(), i) + dh);
    }
    const double a = f_.op().coefficient()(x);
    const double wq = std::pow((x - cfg.q).norm(), 2 * cfg.alpha);
    double e = clamp_exp(U, out);
    if (cfg.mode == Nonlinearity::Sinh) e += clamp_exp(-U, out);
    out.dirichlet += w * 0.5 * a * g.squaredNorm();
    out.zeroth += w * 0.5 * a * U * U;
    out.nonlinear += w * cfg.eps * cfg.eps * a * wq * e;
  }

 private:
  static double clamp_exp(double v, EnergyQuadrature& out) {
    if (std::abs(v) > kExpClamp) {
      ++out.clamped;
      v = std::clamp(v, -kExpClamp, kExpClamp);
    }
    return std::exp(v);
  }

  const ApproxField& f_;
  std::vector<FieldInterpolator> interp_;
};

// Distance along x0 + t e (t ∈ [0, rmax]) before the ray leaves the domain.
double ray_length(const DomainSpec& dom, const Vec2& x0, const Vec2& e, double rmax) {
  auto inside = [&](double t) { return dom.normalized_radius(x0 + t * e) <= 1.0; };
  if (inside(rmax)) {
    bool all = true;
    for (int k = 1; k < 32 && all; ++k) all = inside(rmax * k / 32.0);
    if (all) return rmax;
  }
  if (!inside(1e-9 * rmax)) return 0.0;
  double lo = 1e-9 * rmax, hi = rmax;
  for (int k = 1; k <= 32; ++k) {
    const double t = rmax * k / 32.0;
    if (!inside(t)) {
      hi = t;
      break;
    }
    lo = t;
  }
  for (int it = 0; it < 80 && hi - lo > 1e-15 * rmax; ++it) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

EnergyQuadrature energy_quadrature(const ApproxField& field, const EnergyQuadratureOptions& opt) {
  const auto& cfg = field.cfg();
  const Mesh& mesh = field.mesh();
  const DomainSpec& dom = mesh.domain;
  const int nc = cfg.m + 1;
  EnergyQuadrature out;
  Integrand integrand(field);

  // Disc radii: at most 45% of the distance to the nearest other centre.
  const double cap = 0.2 * std::sqrt(dom.area() / std::numbers::pi);
  std::vector<Vec2> centre(nc);
  for (int i = 0; i < nc; ++i) centre[i] = cfg.point(i);
  out.disc_radius.assign(nc, cap);
  for (int i = 0; i < nc; ++i)
    for (int j = 0; j < nc; ++j)
      if (i != j) out.disc_radius[i] = std::min(out.disc_radius[i], 0.45 * (centre[i] - centre[j]).norm());

  auto partition = [&](const Vec2& x) {
    double s = 0.0;
    for (int i = 0; i < nc; ++i) s += cutoff((x - centre[i]).norm() / out.disc_radius[i]);
    return s;
  };

  // Local polar discs.
  const GaussRule& gl = gauss_legendre(opt.gauss);
  for (int i = 0; i < nc; ++i) {
    const double R = out.disc_radius[i];
    const double delta = cfg.eps * field.mu().mu[i];
    const double r_in = std::min(opt.inner_factor * delta, 1e-3 * R);
    const int npan = std::max(1, static_cast<int>(std::ceil(opt.panels_per_decade * std::log10(R / r_in))));
    const double dth = 2.0 * std::numbers::pi / opt.angles;
    for (int k = 0; k < opt.angles; ++k) {
      const double th = (k + 0.5) * dth;
      const Vec2 e(std::cos(th), std::sin(th));
      const double Rt = ray_length(dom, centre[i], e, R);
      if (Rt <= 0) continue;
      auto panel = [&](double r0, double r1) {
        if (r1 <= r0) return;
        for (std::size_t g = 0; g < gl.x.size(); ++g) {
          const double r = r0 + (r1 - r0) * gl.x[g];
          const Vec2 x = centre[i] + r * e;
          const double w = gl.w[g] * (r1 - r0) * r * dth * cutoff(r / R);
          integrand.accumulate(x, w, out);
        }
      };
      panel(0.0, std::min(r_in, Rt));
      for (int p = 0; p < npan; ++p) {
        const double r0 = r_in * std::pow(R / r_in, static_cast<double>(p) / npan);
        const double r1 = r_in * std::pow(R / r_in, static_cast<double>(p + 1) / npan);
        panel(std::min(r0, Rt), std::min(r1, Rt));
      }
    }
  }

  // Mesh part with weight 1 − Σχ_i.
  std::vector<QuadPoint> qp;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& T = mesh.triangles[t];
    bool covered = false;
    for (int i = 0; i < nc && !covered; ++i) {
      covered = true;
      for (int k = 0; k < 3; ++k)
        if ((mesh.nodes[T[k]] - centre[i]).norm() > 0.45 * out.disc_radius[i]) covered = false;
    }
    if (covered) continue;
    qp.clear();
    triangle_rule(mesh.nodes[T[0]], mesh.nodes[T[1]], mesh.nodes[T[2]], qp);
    for (const auto& p : qp) {
      const double w = p.w * (1.0 - partition(p.x));
      if (w != 0.0) integrand.accumulate(p.x, w, out);
    }
  }
  return out;
}

std::vector<double> ReducedEnergyReport::terms() const {
  std::vector<double> t{q_block, q_interaction};
  for (std::size_t i = 0; i < spike_blocks.size(); ++i) {
    t.push_back(spike_blocks[i]);
    t.push_back(spike_q_interaction[i]);
    t.push_back(pair_interaction[i]);
  }
  return t;
}

void ReducedEnergyReport::attach_quadrature(double J) {
  quadrature = J;
  gap = std::abs(F - J);
}

ReducedEnergyReport energy_expansion(const SpikeConfig& cfg, const MuVector& mu, const GreenTable& greens) {
  cfg.validate();
  if (static_cast<int>(mu.mu.size()) != cfg.m + 1) throw std::invalid_argument("energy_expansion: wrong μ count");
  std::vector<int> id(cfg.m + 1);
  for (int i = 0; i <= cfg.m; ++i) {
    id[i] = greens.find(cfg.point(i));
    if (id[i] < 0) {
      std::ostringstream os;
      os << "energy_expansion: Green table has no source for point index " << i;
      throw std::invalid_argument(os.str());
    }
  }
  const AnisotropyField& a = greens.op().coefficient();
  const double le = std::log(cfg.eps);
  const double a1 = 1.0 + cfg.alpha;
  const double c0 = cfg.c(0);
  const double aq = a(cfg.q);

  ReducedEnergyReport r;
  r.quadrature = std::numeric_limits<double>::quiet_NaN();
  r.gap = std::numeric_limits<double>::quiet_NaN();
  r.q_block = -0.5 * c0 * aq * (4 * le + 4 - 2 * std::log(8 * a1 * a1) + c0 * greens.robin(id[0]));
  double qi = 0.0, qi_abs = 0.0;
  for (int i = 1; i <= cfg.m; ++i) {
    const double g = cfg.c(i) * greens.G(cfg.q, id[i]);
    qi += cfg.b[0] * cfg.b[i] * g;
    qi_abs += g;
  }
  r.q_interaction = -0.5 * c0 * aq * qi;
  double F_abs = r.q_block - 0.5 * c0 * aq * qi_abs;

  for (int i = 1; i <= cfg.m; ++i) {
    const Vec2& xi = cfg.point(i);
    const double ci = cfg.c(i), ai = a(xi);
    const double block =
        -0.5 * ci * ai *
        (4 * le + 4 - 2 * std::log(8.0) + ci * greens.robin(id[i]) + 4 * cfg.alpha * std::log((xi - cfg.q).norm()));
    const double gq = c0 * greens.G(xi, id[0]);
    double pair = 0.0, pair_abs = 0.0;
    for (int k = 1; k <= cfg.m; ++k) {
      if (k == i) continue;
      const double g = cfg.c(k) * greens.G(xi, id[k]);
      pair += cfg.b[i] * cfg.b[k] * g;
      pair_abs += g;
    }
    r.spike_blocks.push_back(block);
    r.spike_q_interaction.push_back(-0.5 * ci * ai * cfg.b[i] * cfg.b[0] * gq);
    r.pair_interaction.push_back(-0.5 * ci * ai * pair);
    F_abs += block - 0.5 * ci * ai * (gq + pair_abs);
  }
  double F = 0.0;
  for (double t : r.terms()) F += t;
  r.F = F;
  r.F_unsigned = F_abs;
  return r;
}

}  // namespace spikekit
