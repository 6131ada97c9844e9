#include "spikekit/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "spikekit/quadrature.hpp"

namespace spikekit {

namespace {
constexpr double kExpClamp = 700.0;
}

Field nodal_weight(const Mesh& mesh, const SpikeConfig& cfg) {
  const int n = mesh.num_nodes();
  Field w(n);
  const double tiny = 1e-14 * std::max(1.0, mesh.domain.rho(0.0));
  std::vector<QuadPoint> qp;
  for (int i = 0; i < n; ++i) {
    const double r = (mesh.nodes[i] - cfg.q).norm();
    w[i] = std::pow(r, 2 * cfg.alpha);
    if (r > tiny) continue;
    double num = 0.0, den = 0.0;
    for (const auto& T : mesh.triangles) {
      const int k = T[0] == i ? 0 : T[1] == i ? 1 : T[2] == i ? 2 : -1;
      if (k < 0) continue;
      const Vec2 &p0 = mesh.nodes[T[0]], &p1 = mesh.nodes[T[1]], &p2 = mesh.nodes[T[2]];
      qp.clear();
      triangle_rule_singular(p0, p1, p2, cfg.q, 16, qp);
      const Vec2 u = p1 - p0, v = p2 - p0;
      const double det = u.x() * v.y() - u.y() * v.x();
      for (const auto& q : qp) {
        const Vec2 d = q.x - p0;
        const double l1 = (d.x() * v.y() - d.y() * v.x()) / det;
        const double l2 = (u.x() * d.y() - u.y() * d.x()) / det;
        const double lam = k == 0 ? 1.0 - l1 - l2 : k == 1 ? l1 : l2;
        num += q.w * lam * std::pow((q.x - cfg.q).norm(), 2 * cfg.alpha);
        den += q.w * lam;
      }
    }
    w[i] = num / den;
  }
  return w;
}

Field solve_correction(const EllipticOperator& op, const SpikeConfig& cfg, const MuVector& mu, int i,
                       CorrectionInfo* info) {
  if (i < 0 || i > cfg.m) throw std::out_of_range("correction index out of range");
  const AnisotropyField& a = op.coefficient();
  int bad = 0;
  auto f = [&](const Vec2& x) {
    const double v = a.grad_log(x).dot(bubble_grad(x, cfg, mu, i)) - bubble(x, cfg, mu, i);
    if (!std::isfinite(v)) {
      ++bad;
      return 0.0;
    }
    return v;
  };
  auto g = [&](const Vec2& x, const Vec2& n) {
    const double v = -bubble_grad(x, cfg, mu, i).dot(n);
    if (!std::isfinite(v)) {
      ++bad;
      return 0.0;
    }
    return v;
  };
  const Field rhs = op.interior_load(f, {cfg.point(i)}) + op.boundary_load(g);
  Field H = op.solve(rhs);
  if (info) {
    info->relative_residual = (op.matrix() * H - rhs).norm() / std::max(rhs.norm(), 1e-300);
    info->nonfinite_points = bad;
  }
  return H;
}

ApproxField::ApproxField(const EllipticOperator& op, SpikeConfig cfg, MuVector mu, std::vector<Field> corrections,
                         NormParams params)
    : op_(&op), cfg_(std::move(cfg)), mu_(std::move(mu)), H_(std::move(corrections)), params_(params) {
  if (static_cast<int>(H_.size()) != cfg_.m + 1) throw std::invalid_argument("need one correction per bubble");
  const Mesh& m = op.mesh();
  U_ = Field::Zero(m.num_nodes());
  for (int k = 0; k < m.num_nodes(); ++k) {
    double s = 0.0;
    for (int i = 0; i <= cfg_.m; ++i) s += cfg_.b[i] * (bubble(m.nodes[k], cfg_, mu_, i) + H_[i][k]);
    U_[k] = s;
  }
  weight_ = nodal_weight(m, cfg_);
}

double ApproxField::part_at(const Vec2& x, int i) const {
  return bubble(x, cfg_, mu_, i) + FieldInterpolator(mesh(), H_[i]).value(x);
}

double ApproxField::U_at(const Vec2& x) const {
  double s = 0.0;
  for (int i = 0; i <= cfg_.m; ++i) s += cfg_.b[i] * part_at(x, i);
  return s;
}

Vec2 ApproxField::grad_U_at(const Vec2& x) const {
  Vec2 g = Vec2::Zero();
  for (int i = 0; i <= cfg_.m; ++i)
    g += cfg_.b[i] * (bubble_grad(x, cfg_, mu_, i) + FieldInterpolator(mesh(), H_[i]).gradient(x));
  return g;
}

double ApproxField::w_at(const Vec2& x) const { return std::pow((x - cfg_.q).norm(), 2 * cfg_.alpha); }

double ApproxField::clamp_exp(double v) const {
  if (v > kExpClamp) {
    ++clamped_;
    return std::exp(kExpClamp);
  }
  if (v < -kExpClamp) {
    ++clamped_;
    return std::exp(-kExpClamp);
  }
  return std::exp(v);
}

double ApproxField::W_at(const Vec2& x) const {
  const double U = U_at(x);
  const double e4 = std::pow(cfg_.eps, 4);
  double s = clamp_exp(U);
  if (cfg_.mode == Nonlinearity::Sinh) s += clamp_exp(-U);
  return e4 * w_at(x) * s;
}

double ApproxField::R_at(const Vec2& x) const {
  // Each H_i solves its correction problem, so
  //   ΔV + ∇log a·∇V − ε²(V − 4 log ε) = ε² Σ b_i ΔU_i(x),
  // and ΔU_i is known in closed form.
  const double U = U_at(x);
  const double e2 = cfg_.eps * cfg_.eps;
  double lin = 0.0;
  for (int i = 0; i <= cfg_.m; ++i) lin += cfg_.b[i] * bubble_laplacian(x, cfg_, mu_, i);
  double nl = clamp_exp(U);
  if (cfg_.mode == Nonlinearity::Sinh) nl -= clamp_exp(-U);
  return e2 * lin + e2 * e2 * w_at(x) * nl;
}

ApproxField assemble(const EllipticOperator& op, const SpikeConfig& cfg, const MuVector& mu,
                     std::vector<Field> corrections, const NormParams& params) {
  return ApproxField(op, cfg, mu, std::move(corrections), params);
}

Ansatz build_ansatz(GreenTable& greens, SpikeConfig cfg, const NormParams& params) {
  Ansatz out;
  out.source_ids = prepare_sources(greens, cfg);
  out.mu = solve_mu(cfg, greens, out.source_ids);
  std::vector<Field> H;
  for (int i = 0; i <= cfg.m; ++i) {
    CorrectionInfo info;
    H.push_back(solve_correction(greens.op(), cfg, out.mu.mu, i, &info));
    out.corrections.push_back(info);
  }
  out.cfg = cfg;
  out.field = assemble(greens.op(), cfg, out.mu.mu, std::move(H), params);
  return out;
}

SampleSet make_samples(const Mesh& mesh, const SpikeConfig& cfg, const MuVector& mu, int angles, int per_decade) {
  SampleSet s;
  s.x = mesh.nodes;
  s.mesh_nodes = mesh.num_nodes();
  const double rmax = 0.5 * mesh.domain.rho(0.0);
  for (int i = 0; i <= cfg.m; ++i) {
    const Vec2 c = cfg.point(i);
    const double delta = cfg.eps * mu.mu[i];
    const double r0 = 0.01 * delta;
    if (!(r0 < rmax)) continue;
    const int nrad = static_cast<int>(std::ceil(per_decade * std::log10(rmax / r0)));
    for (int k = 0; k <= nrad; ++k) {
      const double r = r0 * std::pow(10.0, static_cast<double>(k) / per_decade);
      for (int j = 0; j < angles; ++j) {
        const double th = 2.0 * std::numbers::pi * (j + 0.5 * (k % 2)) / angles;
        const Vec2 x = c + r * Vec2(std::cos(th), std::sin(th));
        if (mesh.domain.contains(x, -1e-12)) s.x.push_back(x);
      }
    }
  }
  return s;
}

double weight_W(const ApproxField& field, const Vec2& y) { return field.W_at(field.cfg().eps * y); }

Field residual_R(const ApproxField& field, const std::vector<Vec2>& points) {
  Field r(static_cast<Eigen::Index>(points.size()));
  for (std::size_t k = 0; k < points.size(); ++k) r[static_cast<Eigen::Index>(k)] = field.R_at(points[k]);
  return r;
}

Field residual_R(const ApproxField& field) { return residual_R(field, field.mesh().nodes); }

std::array<double, 3> star_weight(const Vec2& x, const SpikeConfig& cfg, const MuVector& mu,
                                  const NormParams& params) {
  const double e = cfg.eps;
  const double rq = (x - cfg.q).norm() / e;
  const double m0 = mu.mu[0];
  const double ah = params.alpha_hat, a = cfg.alpha;
  std::array<double, 3> w{};
  w[0] = e * e;
  w[1] = std::pow(m0, 2 + 2 * ah) * std::pow(rq, 2 * a) / std::pow(m0 + rq, 4 + 2 * a + 2 * ah);
  double s = 0.0;
  for (int j = 1; j <= cfg.m; ++j) {
    const double rj = (x - cfg.point(j)).norm() / e;
    s += std::pow(mu.mu[j], params.sigma) / std::pow(mu.mu[j] + rj, 2 + params.sigma);
  }
  w[2] = s;
  return w;
}

StarNormReport star_norm(const Field& h, const std::vector<Vec2>& points, const SpikeConfig& cfg,
                         const MuVector& mu, const NormParams& params) {
  if (h.size() != static_cast<Eigen::Index>(points.size()))
    throw std::invalid_argument("star_norm: field and point set sizes differ");
  StarNormReport rep;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const Vec2& x = points[k];
    if (cfg.alpha < 0 && (x - cfg.q).norm() == 0.0) {
      rep.excluded_singular = true;
      continue;
    }
    const auto w = star_weight(x, cfg, mu, params);
    const double v = std::abs(h[static_cast<Eigen::Index>(k)]) / (w[0] + w[1] + w[2]);
    if (rep.index < 0 || v > rep.value) {
      rep.value = v;
      rep.index = static_cast<int>(k);
      rep.location = x;
      rep.components = w;
    }
  }
  return rep;
}

Field nodal_W(const ApproxField& field) {
  const auto& cfg = field.cfg();
  const double e4 = std::pow(cfg.eps, 4);
  const Field& U = field.U();
  Field W(U.size());
  for (Eigen::Index k = 0; k < U.size(); ++k) {
    double s = std::exp(std::clamp(U[k], -kExpClamp, kExpClamp));
    if (cfg.mode == Nonlinearity::Sinh) s += std::exp(std::clamp(-U[k], -kExpClamp, kExpClamp));
    W[k] = e4 * field.weight()[k] * s;
  }
  return W;
}

Field apply_L(const ApproxField& field, const Field& phi) {
  const double e2 = field.cfg().eps * field.cfg().eps;
  return e2 * field.op().pointwise(phi) - nodal_W(field).cwiseProduct(phi);
}

Field nonlinear_N(const ApproxField& field, const Field& phi) {
  const auto& cfg = field.cfg();
  const double e4 = std::pow(cfg.eps, 4);
  const Field& U = field.U();
  Field N(U.size());
  for (Eigen::Index k = 0; k < U.size(); ++k) {
    const double p = phi[k];
    double s = std::exp(std::clamp(U[k], -kExpClamp, kExpClamp)) * (std::expm1(p) - p);
    if (cfg.mode == Nonlinearity::Sinh)
      s -= std::exp(std::clamp(-U[k], -kExpClamp, kExpClamp)) * (std::expm1(-p) + p);
    N[k] = e4 * field.weight()[k] * s;
  }
  return N;
}

}  // namespace spikekit
