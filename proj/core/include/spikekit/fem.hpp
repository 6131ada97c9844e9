#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "spikekit/anisotropy.hpp"
#include "spikekit/geometry.hpp"

namespace spikekit {

using SpMat = Eigen::SparseMatrix<double>;
using Field = Eigen::VectorXd;

// Piecewise-linear discretization of  −div(a∇u) + a u  with the natural
// (Neumann) boundary condition. The symmetric matrix
//   A_ij = ∫ a ∇φ_i·∇φ_j + δ_ij a_i m_i
// uses a lumped zeroth-order term, so that the nodal operator
//   (L_h u)_i = (A u)_i / (a_i m_i)
// approximates −Δu − ∇log a·∇u + u. The factorization of A is built once and
// shared by all solves on this mesh.
class EllipticOperator {
 public:
  using Source = std::function<double(const Vec2&)>;
  using Flux = std::function<double(const Vec2& x, const Vec2& normal)>;

  EllipticOperator(const Mesh& mesh, const AnisotropyField& a);
  ~EllipticOperator();
  EllipticOperator(const EllipticOperator&) = delete;
  EllipticOperator& operator=(const EllipticOperator&) = delete;

  const Mesh& mesh() const { return *mesh_; }
  const AnisotropyField& coefficient() const { return a_; }
  const SpMat& matrix() const { return A_; }
  const Field& a_nodes() const { return a_nodes_; }
  // a_i m_i
  const Field& mass() const { return mass_; }
  // ∫_∂Ω a φ_i ds, zero at interior nodes.
  const Field& boundary_weight() const { return bweight_; }

  Field apply(const Field& u) const { return A_ * u; }
  Field pointwise(const Field& u) const;
  Field solve(const Field& rhs) const;

  // b_i = ∫_Ω a f φ_i dx. Triangles near any point of `singular` (or within
  // `near_factor` triangle diameters of one) use the split Duffy rule.
  Field interior_load(const Source& f, const std::vector<Vec2>& singular, double near_factor = 3.0) const;
  // b_i = ∫_∂Ω a g φ_i ds, integrated along the exact boundary curve.
  Field boundary_load(const Flux& g) const;

  // Normal flux recovered from the discrete residual at boundary nodes:
  //   ((A u)_i − b_i) / ∫_∂ a φ_i   where b is the interior load.
  Field recovered_flux(const Field& u, const Field& interior) const;

 private:
  const Mesh* mesh_;
  AnisotropyField a_;
  SpMat A_;
  Field a_nodes_, mass_, bweight_;
  struct Factor;
  std::unique_ptr<Factor> factor_;
};

}  // namespace spikekit
