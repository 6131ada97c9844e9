#include "spikekit/fullsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>

namespace spikekit {

namespace {

constexpr double kExpClamp = 700.0;

double f_of(Nonlinearity mode, double u) {
  const double ep = std::exp(std::min(u, kExpClamp));
  if (mode == Nonlinearity::Exp) return ep;
  return ep - std::exp(std::min(-u, kExpClamp));
}

double df_of(Nonlinearity mode, double u) {
  const double ep = std::exp(std::min(u, kExpClamp));
  if (mode == Nonlinearity::Exp) return ep;
  return ep + std::exp(std::min(-u, kExpClamp));
}

double merit(const EllipticOperator& op, const Field& F) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < F.size(); ++i) s += F[i] * F[i] / op.mass()[i];
  return std::sqrt(s);
}

struct Residual {
  Field F;
  double sup = 0.0;    // sup |F_i| / (a_i m_i)
  double scale = 0.0;  // sup ε² w̄_i |f(u_i)|
  double relative() const { return sup / std::max(scale, 1e-300); }
};

Residual evaluate(const EllipticOperator& op, const SpikeConfig& cfg, const Field& w, const Field& u) {
  Residual r;
  r.F = discrete_residual(op, cfg, w, u);
  const double e2 = cfg.eps * cfg.eps;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    r.sup = std::max(r.sup, std::abs(r.F[i]) / op.mass()[i]);
    r.scale = std::max(r.scale, e2 * w[i] * std::abs(f_of(cfg.mode, u[i])));
  }
  if (!r.F.allFinite()) r.sup = std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace

Field discrete_residual(const EllipticOperator& op, const SpikeConfig& cfg, const Field& weight, const Field& u) {
  const double e2 = cfg.eps * cfg.eps;
  Field F = op.apply(u);
  for (Eigen::Index i = 0; i < u.size(); ++i) F[i] -= e2 * op.mass()[i] * weight[i] * f_of(cfg.mode, u[i]);
  return F;
}

SpMat newton_jacobian(const EllipticOperator& op, const SpikeConfig& cfg, const Field& weight, const Field& u) {
  const double e2 = cfg.eps * cfg.eps;
  SpMat J = op.matrix();
  for (Eigen::Index i = 0; i < u.size(); ++i)
    J.coeffRef(i, i) -= e2 * op.mass()[i] * weight[i] * df_of(cfg.mode, u[i]);
  J.makeCompressed();
  return J;
}

SolveResult newton_solve(const EllipticOperator& op, const SpikeConfig& cfg, const Field& init,
                         const NewtonOptions& opt) {
  cfg.validate();
  const Mesh& mesh = op.mesh();
  if (init.size() != mesh.num_nodes()) throw std::invalid_argument("newton_solve: initial field has wrong size");
  const Field w = nodal_weight(mesh, cfg);

  SolveResult res;
  Field u = init;
  Residual r = evaluate(op, cfg, w, u);
  res.history.push_back(r.relative());
  if (!std::isfinite(r.sup)) {
    res.u = u;
    res.message = "non-finite residual at the initial field";
    return res;
  }

  for (int it = 0; it < opt.max_iters; ++it) {
    if (r.relative() < opt.tol) {
      res.converged = true;
      break;
    }
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(newton_jacobian(op, cfg, w, u));
    if (lu.info() != Eigen::Success) {
      res.message = "Jacobian factorization failed";
      break;
    }
    const Field du = lu.solve(-r.F);
    if (!du.allFinite()) {
      res.message = "non-finite Newton direction";
      break;
    }

    const double m0 = merit(op, r.F);
    double t = 1.0;
    int increases = 0;
    bool accepted = false;
    Residual trial;
    while (t >= opt.min_step) {
      const Field ut = u + t * du;
      trial = evaluate(op, cfg, w, ut);
      const double mt = std::isfinite(trial.sup) ? merit(op, trial.F) : std::numeric_limits<double>::infinity();
      if (mt <= (1.0 - opt.armijo * t) * m0) {
        u = ut;
        accepted = true;
        break;
      }
      increases = mt > m0 ? increases + 1 : 0;
      if (increases >= opt.max_increases) break;
      t *= opt.damping;
    }
    if (!accepted) {
      // At the rounding floor a failed line search is not a failure.
      if (r.relative() < 100.0 * opt.tol) {
        res.converged = true;
      } else {
        std::ostringstream os;
        if (increases >= opt.max_increases)
          os << "divergence: residual increased on " << opt.max_increases << " consecutive damped trials";
        else
          os << "line search underflow (step below " << opt.min_step << ")";
        os << " at iteration " << it + 1;
        res.message = os.str();
      }
      break;
    }
    r = trial;
    res.steps.push_back(t);
    res.history.push_back(r.relative());
  }
  if (!res.converged && res.message.empty()) {
    if (r.relative() < opt.tol)
      res.converged = true;
    else
      res.message = "iteration limit reached";
  }
  if (res.converged) res.message = "converged";

  res.u = u;
  res.residual_sup = r.sup;
  res.nonlinear_scale = r.scale;
  double flux = 0.0;
  for (int b : mesh.boundary_nodes) flux = std::max(flux, std::abs(r.F[b]) / op.boundary_weight()[b]);
  res.neumann_defect = flux;
  if (res.converged) res.spikes = extract_spikes(op, cfg, u);
  return res;
}

SolveResult newton_solve(const ApproxField& ansatz, const NewtonOptions& opt) {
  SolveResult res = newton_solve(ansatz.op(), ansatz.cfg(), ansatz.U(), opt);
  res.phi = res.u - ansatz.U();
  res.phi_sup = res.phi.cwiseAbs().maxCoeff();
  const auto& cfg = ansatz.cfg();
  res.phi_budget = 5.0 * cfg.abs_log_eps() * std::pow(cfg.eps, ansatz.params().residual_exponent(cfg.alpha));
  return res;
}

SpikeReport extract_spikes(const EllipticOperator& op, const SpikeConfig& cfg, const Field& u) {
  const Mesh& mesh = op.mesh();
  const auto adj = mesh.adjacency();
  const double thr = 2.0 * cfg.abs_log_eps();
  SpikeReport rep;

  std::vector<int> cand;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const double v = std::abs(u[i]);
    if (!(v > thr)) continue;
    bool strict = true;
    for (int j : adj[i])
      if (std::abs(u[j]) >= v) {
        strict = false;
        break;
      }
    if (strict) cand.push_back(i);
  }
  std::stable_sort(cand.begin(), cand.end(), [&](int a, int b) { return std::abs(u[a]) > std::abs(u[b]); });
  if (static_cast<int>(cand.size()) > cfg.m + 1) {
    std::ostringstream os;
    os << cand.size() << " extrema above threshold; keeping the " << cfg.m + 1 << " largest";
    rep.warnings.push_back(os.str());
    cand.resize(cfg.m + 1);
  }

  const Field w = nodal_weight(mesh, cfg);
  const double e2 = cfg.eps * cfg.eps;
  const AnisotropyField& a = op.coefficient();
  for (std::size_t k = 0; k < cand.size(); ++k) {
    SpikeInfo s;
    s.node = cand[k];
    s.location = mesh.nodes[s.node];
    s.peak = u[s.node];
    s.sign = s.peak > 0 ? 1 : -1;
    s.on_boundary = mesh.is_boundary(s.node);
    s.at_q = (s.location - cfg.q).norm() <= 2.0 * mesh.local_spacing(cfg.q);
    s.radius = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cand.size(); ++j)
      if (j != k) s.radius = std::min(s.radius, 0.5 * (mesh.nodes[cand[j]] - s.location).norm());
    for (int i = 0; i < mesh.num_nodes(); ++i) {
      if ((mesh.nodes[i] - s.location).norm() >= s.radius) continue;
      double comp;
      if (cfg.mode == Nonlinearity::Exp || s.sign > 0)
        comp = std::exp(std::min(u[i], kExpClamp));
      else
        comp = -std::exp(std::min(-u[i], kExpClamp));
      s.mass += e2 * op.mass()[i] * w[i] * comp;
    }
    s.normalized = std::abs(s.mass) / a(s.location);
    if (s.at_q)
      s.target = cfg.c(0);
    else
      s.target = (s.on_boundary ? 4.0 : 8.0) * 3.14159265358979323846;
    rep.total_signed_mass += s.mass;
    rep.total_normalized += s.normalized;
    rep.spikes.push_back(s);
  }
  return rep;
}

}  // namespace spikekit
