#pragma once

#include <string>
#include <vector>

#include "spikekit/assembly.hpp"

namespace spikekit {

struct NewtonOptions {
  int max_iters = 40;
  double tol = 1e-9;           // sup of the nodal residual relative to the nonlinear scale
  double armijo = 1e-4;
  double damping = 0.5;        // step factor per backtrack
  double min_step = 0x1p-20;
  int max_increases = 5;       // consecutive damped trials with a larger residual
};

struct SpikeInfo {
  Vec2 location = Vec2::Zero();
  int node = -1;
  int sign = 0;
  double peak = 0.0;        // u at the extremum
  double radius = 0.0;      // radius of the mass ball
  double mass = 0.0;        // ε²∫_B a|x−q|^{2α} e^{±u}, signed by the component
  double normalized = 0.0;  // |mass| / a(location)
  double target = 0.0;      // quantization constant for this kind of point
  bool at_q = false;
  bool on_boundary = false;
};

struct SpikeReport {
  std::vector<SpikeInfo> spikes;
  double total_signed_mass = 0.0;
  double total_normalized = 0.0;  // Σ |mass_i| / a(location_i)
  std::vector<std::string> warnings;
};

struct SolveResult {
  Field u;                      // physical solution at the nodes
  Field phi;                    // u − U_ξ (physical scale)
  std::vector<double> history;  // relative residual sup-norm per iterate (history[0] = start)
  std::vector<double> steps;    // accepted damping factors
  bool converged = false;
  std::string message;
  double residual_sup = 0.0;    // sup |F(u)_i / (a_i m_i)|
  double nonlinear_scale = 0.0; // sup ε² w̄ |f(u)|
  double phi_sup = 0.0;
  double phi_budget = 0.0;      // 5 |log ε| ε^γ, γ the residual exponent
  double neumann_defect = 0.0;  // sup over boundary nodes of the recovered flux
  // φ is stored in the physical scale; the rescaled corrector at y is φ(εy).
  std::string phi_scale = "physical";
  SpikeReport spikes;
};

// Discrete residual F(u) = A u − ε² diag(a m w̄) f(u) and its Jacobian.
Field discrete_residual(const EllipticOperator& op, const SpikeConfig& cfg, const Field& weight, const Field& u);
SpMat newton_jacobian(const EllipticOperator& op, const SpikeConfig& cfg, const Field& weight, const Field& u);

// Damped Newton iteration from `init` (typically the nodal ansatz U_ξ).
SolveResult newton_solve(const EllipticOperator& op, const SpikeConfig& cfg, const Field& init,
                         const NewtonOptions& opt = {});
// Convenience overload seeded with the assembled ansatz; also fills φ and its budget.
SolveResult newton_solve(const ApproxField& ansatz, const NewtonOptions& opt = {});

// Local extrema of |u| above 2|log ε|, with masses over disjoint balls.
SpikeReport extract_spikes(const EllipticOperator& op, const SpikeConfig& cfg, const Field& u);

}  // namespace spikekit
