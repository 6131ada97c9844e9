#pragma once

#include <array>
#include <string>
#include <vector>

#include "spikekit/profiles.hpp"

namespace spikekit {

// Weight |x−q|^{2α} at the nodes. At a node sitting on q the value is the
// average of the weight against the node's hat function, which keeps the
// discrete mass of the nonlinear term for α < 0 and α > 0 alike.
Field nodal_weight(const Mesh& mesh, const SpikeConfig& cfg);

struct CorrectionInfo {
  double relative_residual = 0.0;  // ‖A H − b‖ / ‖b‖ of the linear solve
  int nonfinite_points = 0;        // quadrature points with non-finite data (set to 0)
};

// Solves −ΔH_i − ∇log a·∇H_i + H_i = ∇log a·∇U_i − U_i with
// ∂H_i/∂n = −∂U_i/∂n, on the shared factorization.
Field solve_correction(const EllipticOperator& op, const SpikeConfig& cfg, const MuVector& mu, int i,
                       CorrectionInfo* info = nullptr);

// U_ξ = Σ b_i (U_i + H_i) with all parts available at arbitrary points.
class ApproxField {
 public:
  ApproxField() = default;
  ApproxField(const EllipticOperator& op, SpikeConfig cfg, MuVector mu, std::vector<Field> corrections,
              NormParams params);

  const EllipticOperator& op() const { return *op_; }
  const Mesh& mesh() const { return op_->mesh(); }
  const SpikeConfig& cfg() const { return cfg_; }
  const MuVector& mu() const { return mu_; }
  const NormParams& params() const { return params_; }
  const std::vector<Field>& corrections() const { return H_; }
  const Field& U() const { return U_; }            // nodal U_ξ
  const Field& weight() const { return weight_; }  // nodal |x−q|^{2α}

  // Physical-scale evaluation at any x in the closed domain.
  double U_at(const Vec2& x) const;
  Vec2 grad_U_at(const Vec2& x) const;
  double part_at(const Vec2& x, int i) const;  // U_i + H_i
  // Rescaled quantities at y = x/ε, evaluated at the physical point x.
  double V_at(const Vec2& x) const { return U_at(x) + 4.0 * std::log(cfg_.eps); }
  double W_at(const Vec2& x) const;
  double R_at(const Vec2& x) const;

  // Number of exponentials clamped at ±700 so far (overflow guard).
  long clamped() const { return clamped_; }

 private:
  double w_at(const Vec2& x) const;
  double clamp_exp(double v) const;

  const EllipticOperator* op_ = nullptr;
  SpikeConfig cfg_;
  MuVector mu_;
  std::vector<Field> H_;
  NormParams params_;
  Field U_, weight_;
  mutable long clamped_ = 0;
};

ApproxField assemble(const EllipticOperator& op, const SpikeConfig& cfg, const MuVector& mu,
                     std::vector<Field> corrections, const NormParams& params);

// Convenience pipeline: sources → scaling system → corrections → field.
struct Ansatz {
  SpikeConfig cfg;
  MuReport mu;
  std::vector<int> source_ids;
  std::vector<CorrectionInfo> corrections;
  ApproxField field;
};
Ansatz build_ansatz(GreenTable& greens, SpikeConfig cfg, const NormParams& params);

// Evaluation points for sup norms: the mesh nodes followed by polar clouds
// around q and every ξ_i reaching down to 1% of the local bubble scale.
struct SampleSet {
  std::vector<Vec2> x;
  int mesh_nodes = 0;
};
SampleSet make_samples(const Mesh& mesh, const SpikeConfig& cfg, const MuVector& mu, int angles = 24,
                       int per_decade = 8);

double weight_W(const ApproxField& field, const Vec2& y);
Field residual_R(const ApproxField& field, const std::vector<Vec2>& points);
Field residual_R(const ApproxField& field);  // at the mesh nodes

struct StarNormReport {
  double value = 0.0;
  int index = -1;  // attaining sample
  Vec2 location = Vec2::Zero();
  std::array<double, 3> components{};  // ε², q-term, Σ ξ-terms at the attaining point
  bool excluded_singular = false;  // a sample sitting on q with α < 0 was skipped
};

// The three components of the ∗-norm weight at physical x (y = x/ε).
std::array<double, 3> star_weight(const Vec2& x, const SpikeConfig& cfg, const MuVector& mu,
                                  const NormParams& params);
StarNormReport star_norm(const Field& h, const std::vector<Vec2>& points, const SpikeConfig& cfg,
                         const MuVector& mu, const NormParams& params);

// L(φ) = −Δφ − ∇log a·∇φ + ε²φ − Wφ in rescaled variables, on nodal fields.
Field apply_L(const ApproxField& field, const Field& phi);
// Nodal W = ε⁴ w (e^U + e^{−U}) (exp mode: ε⁴ w e^U).
Field nodal_W(const ApproxField& field);
// N(φ) on nodal fields.
Field nonlinear_N(const ApproxField& field, const Field& phi);

}  // namespace spikekit
