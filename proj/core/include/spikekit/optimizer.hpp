#pragma once

#include <string>
#include <vector>

#include "spikekit/energy.hpp"

namespace spikekit {

enum class Regime { Interior, BoundaryMixed };
enum class OptimizerStatus { InteriorMax, HitConstraint, MaxIters };

std::string to_string(Regime r);
std::string to_string(OptimizerStatus s);

// Interior q → interior regime (requires l = m); boundary q → mixed regime.
Regime infer_regime(const SpikeConfig& cfg);

struct OptimizerOptions {
  int max_iters = 300;
  double initial_step = 0.25;   // simplex edge relative to the starting radius
  double ftol = 1e-9;           // relative spread of F over the simplex
  double sigma_tilde = 0.5;     // spacing constant of the boundary-regime start
  double binding_margin = 0.02; // relative margin below which a constraint counts as binding
};

// Starting points: a regular m-gon of radius 1/|log ε| about q (interior
// regime) or points at spacing σ̃/√|log ε| along the inward normal and along
// the boundary (mixed regime). Starts that would leave B_{d/2}(q) are scaled
// into it; `scaled` reports whether that happened.
std::vector<Vec2> initial_configuration(const SpikeConfig& tmpl, const DomainSpec& domain, Regime regime,
                                        double sigma_tilde, bool* scaled = nullptr);

struct OptimizerIterate {
  int iter = 0;
  std::vector<Vec2> xi;
  double F = 0.0;
  double min_margin = 0.0;  // smallest relative O_ε margin
};

struct OptimizerTrace {
  Regime regime = Regime::Interior;
  std::vector<OptimizerIterate> iterates;  // best vertex after every iteration
  OptimizerStatus status = OptimizerStatus::MaxIters;
  std::vector<ConstraintMargin> final_margins;
  std::string binding;  // name of the constraint with the smallest relative margin
  SpikeConfig final_cfg;
  ReducedEnergyReport final_energy;
  bool start_scaled = false;
  int evaluations = 0;
  int rejected = 0;  // infeasible or failed trials
  double min_relative_margin() const;
};

// Maximizes the signed reduced energy over O_ε with a Nelder–Mead simplex on
// 2l + (m − l) coordinates (boundary points move by boundary angle). Trial
// points outside O_ε or whose Green solve fails are rejected. Every trial
// solves fresh Green sources on the operator's factorization; the q source
// is solved once per run.
OptimizerTrace maximize_F(const SpikeConfig& tmpl, const EllipticOperator& op, Regime regime,
                          const OptimizerOptions& opt = {});

void write_trace_csv(const std::string& path, const OptimizerTrace& trace);

}  // namespace spikekit
