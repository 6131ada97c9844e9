#include "spikekit/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "spikekit/report.hpp"

namespace spikekit {

std::string to_string(Regime r) { return r == Regime::Interior ? "interior" : "boundary-mixed"; }

std::string to_string(OptimizerStatus s) {
  switch (s) {
    case OptimizerStatus::InteriorMax: return "interior-max";
    case OptimizerStatus::HitConstraint: return "hit-constraint";
    case OptimizerStatus::MaxIters: return "max-iters";
  }
  return "unknown";
}

Regime infer_regime(const SpikeConfig& cfg) {
  if (!cfg.q_on_boundary) {
    if (cfg.l != cfg.m) throw std::invalid_argument("interior q requires all spike points interior (l = m)");
    return Regime::Interior;
  }
  return Regime::BoundaryMixed;
}

double OptimizerTrace::min_relative_margin() const {
  double r = std::numeric_limits<double>::infinity();
  for (const auto& c : final_margins) r = std::min(r, c.margin / c.threshold);
  return r;
}

namespace {

// Boundary point at arclength offset s from the boundary angle θ0.
double angle_at_arclength(const DomainSpec& dom, double theta0, double s) {
  double th = theta0;
  const int steps = 64;
  const double ds = s / steps;
  for (int k = 0; k < steps; ++k) {
    const double speed = dom.boundary_tangent(th).norm();
    const double mid = th + 0.5 * ds / speed;
    th += ds / dom.boundary_tangent(mid).norm();
  }
  return th;
}

}  // namespace

std::vector<Vec2> initial_configuration(const SpikeConfig& tmpl, const DomainSpec& domain, Regime regime,
                                        double sigma_tilde, bool* scaled) {
  const int m = tmpl.m;
  const double L = tmpl.abs_log_eps();
  std::vector<Vec2> xi(m);
  if (scaled) *scaled = false;
  if (m == 0) return xi;
  if (regime == Regime::Interior) {
    double r0 = 1.0 / L;
    if (r0 > 0.5 * tmpl.d) {
      r0 = 0.5 * tmpl.d;
      if (scaled) *scaled = true;
    }
    for (int k = 0; k < m; ++k) {
      const double th = 2.0 * std::numbers::pi * k / m;
      xi[k] = tmpl.q + r0 * Vec2(std::cos(th), std::sin(th));
    }
    return xi;
  }
  double h = sigma_tilde / std::sqrt(L);
  const int nb = m - tmpl.l;
  const int reach = std::max(tmpl.l, (nb + 1) / 2);
  if (reach * h > 0.5 * tmpl.d) {
    h = 0.5 * tmpl.d / reach;
    if (scaled) *scaled = true;
  }
  const double thq = domain.angle_of(tmpl.q);
  const Vec2 n = boundary_normal(domain, thq);
  for (int k = 0; k < tmpl.l; ++k) xi[k] = tmpl.q - (k + 1) * h * n;
  for (int k = 0; k < nb; ++k) {
    const int side = k % 2 == 0 ? 1 : -1;
    const double s = side * (k / 2 + 1) * h;
    xi[tmpl.l + k] = domain.boundary_point(angle_at_arclength(domain, thq, s));
  }
  return xi;
}

namespace {

class Objective {
 public:
  Objective(const SpikeConfig& tmpl, const EllipticOperator& op) : tmpl_(tmpl), op_(op) {
    if (tmpl_.q_on_boundary) tmpl_.q = op.mesh().nodes[op.mesh().nearest_boundary_node(tmpl_.q)];
    qfield_ = solve_green(op, tmpl_.q, tmpl_.location(0));
  }

  int dim() const { return 2 * tmpl_.l + (tmpl_.m - tmpl_.l); }

  Eigen::VectorXd encode(const std::vector<Vec2>& xi) const {
    Eigen::VectorXd x(dim());
    int k = 0;
    for (int i = 0; i < tmpl_.m; ++i) {
      if (i < tmpl_.l) {
        x[k++] = xi[i].x();
        x[k++] = xi[i].y();
      } else {
        double th = op_.mesh().domain.angle_of(xi[i]);
        // Keep boundary angles continuous around the angle of q.
        const double thq = op_.mesh().domain.angle_of(tmpl_.q);
        while (th - thq > std::numbers::pi) th -= 2 * std::numbers::pi;
        while (th - thq < -std::numbers::pi) th += 2 * std::numbers::pi;
        x[k++] = th;
      }
    }
    return x;
  }

  std::vector<Vec2> decode(const Eigen::VectorXd& x) const {
    std::vector<Vec2> xi(tmpl_.m);
    int k = 0;
    for (int i = 0; i < tmpl_.m; ++i) {
      if (i < tmpl_.l) {
        xi[i] = Vec2(x[k], x[k + 1]);
        k += 2;
      } else {
        xi[i] = op_.mesh().domain.boundary_point(x[k++]);
      }
    }
    return xi;
  }

  SpikeConfig config(const std::vector<Vec2>& xi) const {
    SpikeConfig c = tmpl_;
    c.xi = xi;
    return c;
  }

  // Signed F at the configuration, or −∞ for a rejected trial.
  double operator()(const Eigen::VectorXd& x, ReducedEnergyReport* rep = nullptr,
                    AdmissibilityReport* adm = nullptr) {
    ++evaluations;
    SpikeConfig c = config(decode(x));
    GreenTable table(op_);
    try {
      table.add(qfield_);
      for (int i = 1; i <= c.m; ++i)
        if (c.is_boundary(i)) c.xi[i - 1] = op_.mesh().nodes[op_.mesh().nearest_boundary_node(c.xi[i - 1])];
      AdmissibilityReport a = check_admissible(c, op_.mesh().domain);
      if (adm) *adm = a;
      if (!a.admissible) {
        ++rejected;
        return -std::numeric_limits<double>::infinity();
      }
      for (int i = 1; i <= c.m; ++i) table.add(c.point(i), c.location(i));
      MuVector mu{std::vector<double>(c.m + 1, 1.0)};
      ReducedEnergyReport r = energy_expansion(c, mu, table);
      if (!std::isfinite(r.F)) throw std::runtime_error("non-finite F");
      if (rep) *rep = r;
      return r.F;
    } catch (const std::exception&) {
      ++rejected;
      return -std::numeric_limits<double>::infinity();
    }
  }

  const SpikeConfig& tmpl() const { return tmpl_; }
  int evaluations = 0;
  int rejected = 0;

 private:
  SpikeConfig tmpl_;
  const EllipticOperator& op_;
  GreenField qfield_;
};

}  // namespace

OptimizerTrace maximize_F(const SpikeConfig& tmpl, const EllipticOperator& op, Regime regime,
                          const OptimizerOptions& opt) {
  tmpl.validate();
  if (tmpl.m < 1) throw std::invalid_argument("maximize_F needs at least one spike point");
  if (regime == Regime::Interior && (tmpl.q_on_boundary || tmpl.l != tmpl.m))
    throw std::invalid_argument("interior regime needs interior q and l = m");
  if (regime == Regime::BoundaryMixed && !tmpl.q_on_boundary)
    throw std::invalid_argument("boundary-mixed regime needs q on the boundary");

  Objective f(tmpl, op);
  OptimizerTrace trace;
  trace.regime = regime;
  const DomainSpec& dom = op.mesh().domain;
  const std::vector<Vec2> start = initial_configuration(f.tmpl(), dom, regime, opt.sigma_tilde, &trace.start_scaled);
  double r0 = 0.0;
  for (const auto& x : start) r0 = std::max(r0, (x - f.tmpl().q).norm());

  const int n = f.dim();
  std::vector<Eigen::VectorXd> simplex(n + 1, f.encode(start));
  std::vector<double> val(n + 1);
  // Boundary angles are scaled by the local radius so every coordinate moves by about the same distance.
  std::vector<double> scale;
  for (int i = 0; i < tmpl.m; ++i) {
    if (i < tmpl.l) {
      scale.push_back(1.0);
      scale.push_back(1.0);
    } else {
      scale.push_back(1.0 / dom.rho(dom.angle_of(start[i])));
    }
  }
  for (int k = 0; k < n; ++k) simplex[k + 1][k] += opt.initial_step * r0 * scale[k];
  for (int k = 0; k <= n; ++k) val[k] = f(simplex[k]);
  if (!std::isfinite(val[0])) throw std::runtime_error("initial configuration is not admissible");
  for (int k = 1; k <= n; ++k) {
    // Flip infeasible initial vertices to the other side.
    if (!std::isfinite(val[k])) {
      simplex[k] = 2.0 * simplex[0] - simplex[k];
      val[k] = f(simplex[k]);
    }
  }

  std::vector<int> order(n + 1);
  auto sort = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return val[a] > val[b]; });
  };
  auto record = [&](int iter) {
    OptimizerIterate it;
    it.iter = iter;
    it.xi = f.decode(simplex[order[0]]);
    for (int i = tmpl.l; i < tmpl.m; ++i) it.xi[i] = op.mesh().nodes[op.mesh().nearest_boundary_node(it.xi[i])];
    it.F = val[order[0]];
    SpikeConfig c = f.tmpl();
    c.xi = it.xi;
    it.min_margin = check_admissible(c, dom).min_relative_margin();
    trace.iterates.push_back(std::move(it));
  };

  sort();
  record(0);
  bool converged = false;
  int iter = 0;
  while (iter < opt.max_iters) {
    ++iter;
    const int best = order[0], worst = order[n], second = order[n - 1];
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < n; ++k) centroid += simplex[order[k]];
    centroid /= n;

    const Eigen::VectorXd xr = centroid + (centroid - simplex[worst]);
    const double fr = f(xr);
    if (fr > val[best]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = f(xe);
      if (fe > fr) {
        simplex[worst] = xe;
        val[worst] = fe;
      } else {
        simplex[worst] = xr;
        val[worst] = fr;
      }
    } else if (fr > val[second]) {
      simplex[worst] = xr;
      val[worst] = fr;
    } else {
      const bool outside = fr > val[worst];
      const Eigen::VectorXd xc =
          outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid)) : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
      const double fc = f(xc);
      if (fc > (outside ? fr : val[worst])) {
        simplex[worst] = xc;
        val[worst] = fc;
      } else {
        for (int k = 1; k <= n; ++k) {
          const int v = order[k];
          simplex[v] = simplex[best] + 0.5 * (simplex[v] - simplex[best]);
          val[v] = f(simplex[v]);
        }
      }
    }
    sort();
    record(iter);

    // F-spread test only: on symmetric domains F is flat along rigid rotations,
    // so the simplex need not shrink in every direction.
    const double spread = val[order[0]] - val[order[n]];
    if (std::isfinite(spread) && spread <= opt.ftol * (1.0 + std::abs(val[order[0]]))) {
      converged = true;
      break;
    }
  }

  AdmissibilityReport adm;
  ReducedEnergyReport rep;
  f(simplex[order[0]], &rep, &adm);
  trace.final_energy = rep;
  trace.final_margins = adm.margins;
  trace.final_cfg = f.tmpl();
  trace.final_cfg.xi = trace.iterates.back().xi;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& c : adm.margins)
    if (c.margin / c.threshold < worst_margin) {
      worst_margin = c.margin / c.threshold;
      trace.binding = c.name;
    }
  // A binding constraint explains a stalled simplex too, so it takes precedence.
  if (worst_margin < opt.binding_margin)
    trace.status = OptimizerStatus::HitConstraint;
  else if (!converged)
    trace.status = OptimizerStatus::MaxIters;
  else
    trace.status = OptimizerStatus::InteriorMax;
  trace.evaluations = f.evaluations;
  trace.rejected = f.rejected;
  return trace;
}

void write_trace_csv(const std::string& path, const OptimizerTrace& trace) {
  CsvWriter csv(path);
  std::vector<std::string> cols{"iter"};
  const int m = trace.iterates.empty() ? 0 : static_cast<int>(trace.iterates.front().xi.size());
  for (int i = 1; i <= m; ++i) {
    cols.push_back("xi" + std::to_string(i) + "_x");
    cols.push_back("xi" + std::to_string(i) + "_y");
  }
  cols.push_back("F");
  cols.push_back("min_margin");
  csv.header(cols);
  for (const auto& it : trace.iterates) {
    csv.cell(it.iter);
    for (const auto& x : it.xi) csv.cell(x.x()).cell(x.y());
    csv.cell(it.F).cell(it.min_margin);
    csv.end_row();
  }
}

}  // namespace spikekit
