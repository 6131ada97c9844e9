#pragma once

#include <array>
#include <string>
#include <vector>

#include "spikekit/green.hpp"

namespace spikekit {

enum class Nonlinearity { Sinh, Exp };

std::string to_string(Nonlinearity mode);

// One ansatz configuration. Index 0 refers to the point q, indices 1..m to
// the spike points ξ_i; the first l spike points are interior, the rest lie
// on the boundary.
struct SpikeConfig {
  double eps = 1e-3;
  double alpha = 0.5;
  int m = 0;
  int l = 0;
  std::vector<Vec2> xi;
  std::vector<int> b{1};  // b_0..b_m
  Nonlinearity mode = Nonlinearity::Sinh;
  Vec2 q = Vec2::Zero();
  bool q_on_boundary = false;
  double d = 0.05;  // radius of the ball B_d(q) that holds every ξ_i

  double kappa() const { return m * (3.0 * m + alpha + 1.0); }
  double abs_log_eps() const;
  // Mass constants: c_0 = 8π(1+α) or 4π(1+α); c_i = 8π or 4π.
  double c(int i) const;
  bool is_boundary(int i) const { return i == 0 ? q_on_boundary : i > l; }
  SourceLocation location(int i) const {
    return is_boundary(i) ? SourceLocation::Boundary : SourceLocation::Interior;
  }
  const Vec2& point(int i) const { return i == 0 ? q : xi.at(i - 1); }

  // Throws std::invalid_argument for integer or out-of-range α, inconsistent
  // sizes, signs other than ±1, or exp mode with a negative sign.
  void validate() const;
};

bool is_integer_alpha(double alpha);

struct MuVector {
  std::vector<double> mu;  // μ_0..μ_m
};

struct MuBounds {
  double c0 = 1e-3, c1 = 1e3, c2 = -1.0;  // c2 < 0 → κ + 2
  double c3 = 1e-3, c4 = 1e3, c5 = -1.0;  // c5 < 0 → κ + 2
};

struct MuReport {
  MuVector mu;
  std::vector<double> residual;  // per equation, relative to max(1, |rhs|)
  std::vector<double> bound_value;  // μ_0^{2(1+α)}ε^{2α}, μ_j²/|ξ_j−q|^{2α}
  std::vector<double> bound_lower, bound_upper;
  std::vector<bool> bound_ok;
  std::vector<std::string> warnings;
  bool all_bounds_ok() const;
  double max_residual() const;
};

struct NormParams {
  double p = 1.5;
  double beta = 0.4;
  double sigma = 0.1;
  double alpha_hat = 0.0;
  double R0 = 10.0;

  static NormParams defaults(double alpha);
  static std::array<double, 3> excluded_p(double alpha);
  // Throws std::invalid_argument when a range or exclusion is violated.
  void validate(double alpha) const;
  // min{β, 2(α−α̂), 2/p−1}
  double residual_exponent(double alpha) const;
  // min{2/p−1, 2(1+α)}
  double correction_exponent(double alpha) const;
};

// Bubbles and their exact derivatives.
double bubble_u0(const Vec2& x, const SpikeConfig& cfg, double mu0);
double bubble_ui(const Vec2& x, const SpikeConfig& cfg, int i, double mui);
Vec2 bubble_u0_grad(const Vec2& x, const SpikeConfig& cfg, double mu0);
Vec2 bubble_ui_grad(const Vec2& x, const SpikeConfig& cfg, int i, double mui);
// −ε²|x−q|^{2α}e^{U_0} and −ε²|ξ_i−q|^{2α}e^{U_i}
double bubble_u0_laplacian(const Vec2& x, const SpikeConfig& cfg, double mu0);
double bubble_ui_laplacian(const Vec2& x, const SpikeConfig& cfg, int i, double mui);

// Dispatch on the index: 0 → U_0, i ≥ 1 → U_i.
double bubble(const Vec2& x, const SpikeConfig& cfg, const MuVector& mu, int i);
Vec2 bubble_grad(const Vec2& x, const SpikeConfig& cfg, const MuVector& mu, int i);
double bubble_laplacian(const Vec2& x, const SpikeConfig& cfg, const MuVector& mu, int i);

struct KernelValues {
  double z0, z1, z2, ztilde;
};
KernelValues kernels(const Vec2& z, double alpha);

// (∫8/(1+|t|²)², ∫8(1+α)²|t|^{2α}/(1+|t|^{2(1+α)})²,
//  ∫8/(1+|t|²)² log[8/(1+|t|²)²],
//  ∫8(1+α)²|t|^{2α}/(1+|t|^{2(1+α)})² log[8(1+α)²/(1+|t|^{2(1+α)})²])
std::array<double, 4> standard_integrals(double alpha);
// The same four integrals by adaptive radial quadrature.
std::array<double, 4> standard_integrals_quadrature(double alpha);

// Adds q and all ξ_i to the table (boundary points are moved onto boundary
// nodes, and cfg is updated accordingly). Returns the source ids, index 0 = q.
std::vector<int> prepare_sources(GreenTable& table, SpikeConfig& cfg);

// Closed-form solution of the scaling system for μ_0..μ_m.
MuReport solve_mu(const SpikeConfig& cfg, const GreenTable& greens, const MuBounds& bounds = {});
MuReport solve_mu(const SpikeConfig& cfg, const GreenTable& greens, const std::vector<int>& ids,
                  const MuBounds& bounds = {});

struct ConstraintMargin {
  std::string name;
  double value;
  double threshold;
  double margin;  // value − threshold (or threshold − value for the B_d(q) ball)
};

struct AdmissibilityReport {
  std::vector<ConstraintMargin> margins;
  bool admissible = true;
  double min_relative_margin() const;  // min margin/threshold
};

AdmissibilityReport check_admissible(const SpikeConfig& cfg, const DomainSpec& domain);

}  // namespace spikekit
