#pragma once

#include <string>
#include <vector>

#include "spikekit/assembly.hpp"

namespace spikekit {

struct EnergyQuadratureOptions {
  int angles = 64;             // trapezoidal angles of the local polar discs
  int panels_per_decade = 3;   // log-radial panels
  int gauss = 8;               // Gauss points per radial panel
  double inner_factor = 1e-4;  // innermost panel ends at inner_factor·εμ_i
};

struct EnergyQuadrature {
  double dirichlet = 0.0;  // ½∫a|∇U|²
  double zeroth = 0.0;     // ½∫a U²
  double nonlinear = 0.0;  // ε²∫a|x−q|^{2α}(e^U + e^{−U})
  long clamped = 0;        // exponentials clamped at ±700
  std::vector<double> disc_radius;  // cutoff radius around q, ξ_1, ...
  double value() const { return dirichlet + zeroth - nonlinear; }
};

// J(U_ξ) by a partition of unity: smooth cutoff discs around q and every ξ_i
// are integrated in local polar coordinates (log-radial panels, rays cut at
// the boundary), the rest on the mesh with the seven-point rule. Bubble parts
// are evaluated analytically, corrections by interpolation.
EnergyQuadrature energy_quadrature(const ApproxField& field, const EnergyQuadratureOptions& opt = {});

// Closed-form reduced energy, split into the terms that make up F.
struct ReducedEnergyReport {
  double q_block = 0.0;                  // −½c₀a(q)[4logε + 4 − 2log8(1+α)² + c₀H(q,q)]
  std::vector<double> spike_blocks;      // −½c_i a(ξ_i)[4logε + 4 − 2log8 + c_iH(ξ_i,ξ_i) + 4α log|ξ_i−q|]
  double q_interaction = 0.0;            // −½c₀a(q) Σ b₀b_i c_i G(q,ξ_i)
  std::vector<double> spike_q_interaction;  // −½c_i a(ξ_i) b_i b₀ c₀ G(ξ_i,q)
  std::vector<double> pair_interaction;     // −½c_i a(ξ_i) Σ_{k≠i} b_i b_k c_k G(ξ_i,ξ_k)
  double F = 0.0;                        // sum of the terms above (sign products kept)
  double F_unsigned = 0.0;               // the same expansion with every sign product set to +1
  double quadrature = 0.0;               // J(U_ξ) when attached, NaN otherwise
  double gap = 0.0;                      // |F − quadrature|, NaN when not attached

  // Terms in the order they are summed into F.
  std::vector<double> terms() const;
  void attach_quadrature(double J);
};

// Throws std::invalid_argument when the table lacks one of the sources.
ReducedEnergyReport energy_expansion(const SpikeConfig& cfg, const MuVector& mu, const GreenTable& greens);

}  // namespace spikekit
