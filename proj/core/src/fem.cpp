#include "spikekit/fem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/SparseCholesky>

#include "spikekit/quadrature.hpp"

namespace spikekit {

struct EllipticOperator::Factor {
  Eigen::SimplicialLDLT<SpMat> ldlt;
};

EllipticOperator::EllipticOperator(const Mesh& mesh, const AnisotropyField& a)
    : mesh_(&mesh), a_(a), factor_(std::make_unique<Factor>()) {
  const int n = mesh.num_nodes();
  a_nodes_.resize(n);
  for (int i = 0; i < n; ++i) a_nodes_[i] = a(mesh.nodes[i]);
  mass_ = a_nodes_.cwiseProduct(Eigen::Map<const Field>(mesh.cell_area.data(), n));

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.triangles.size() * 9 + n);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& T = mesh.triangles[t];
    const Vec2 p[3] = {mesh.nodes[T[0]], mesh.nodes[T[1]], mesh.nodes[T[2]]};
    const double area = mesh.tri_area[t];
    // Edge-midpoint rule for the mean of a over the triangle.
    const double abar =
        (a(0.5 * (p[0] + p[1])) + a(0.5 * (p[1] + p[2])) + a(0.5 * (p[2] + p[0]))) / 3.0;
    Vec2 g[3];
    for (int k = 0; k < 3; ++k) {
      const Vec2& pj = p[(k + 1) % 3];
      const Vec2& pk = p[(k + 2) % 3];
      g[k] = Vec2(pj.y() - pk.y(), pk.x() - pj.x()) / (2.0 * area);
    }
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) trip.emplace_back(T[r], T[c], abar * area * g[r].dot(g[c]));
  }
  for (int i = 0; i < n; ++i) trip.emplace_back(i, i, mass_[i]);
  A_.resize(n, n);
  A_.setFromTriplets(trip.begin(), trip.end());
  A_.makeCompressed();

  factor_->ldlt.compute(A_);
  if (factor_->ldlt.info() != Eigen::Success)
    throw std::runtime_error("factorization of the elliptic operator failed");

  bweight_ = boundary_load([](const Vec2&, const Vec2&) { return 1.0; });
}

EllipticOperator::~EllipticOperator() = default;

Field EllipticOperator::pointwise(const Field& u) const { return (A_ * u).cwiseQuotient(mass_); }

Field EllipticOperator::solve(const Field& rhs) const {
  Field x = factor_->ldlt.solve(rhs);
  if (factor_->ldlt.info() != Eigen::Success || !x.allFinite())
    throw std::runtime_error("linear solve failed on the elliptic operator");
  return x;
}

Field EllipticOperator::interior_load(const Source& f, const std::vector<Vec2>& singular,
                                      double near_factor) const {
  const Mesh& mesh = *mesh_;
  Field b = Field::Zero(mesh.num_nodes());
  std::vector<QuadPoint> qp;
  qp.reserve(512);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& T = mesh.triangles[t];
    const Vec2 &p0 = mesh.nodes[T[0]], &p1 = mesh.nodes[T[1]], &p2 = mesh.nodes[T[2]];
    qp.clear();
    const double diam = std::max({(p1 - p0).norm(), (p2 - p1).norm(), (p0 - p2).norm()});
    int near = -1;
    double best = near_factor * diam;
    for (std::size_t k = 0; k < singular.size(); ++k) {
      const double dk = (closest_point_on_triangle(singular[k], p0, p1, p2) - singular[k]).norm();
      if (dk <= best) {
        best = dk;
        near = static_cast<int>(k);
      }
    }
    if (near >= 0) {
      triangle_rule_singular(p0, p1, p2, singular[near], 12, qp);
    } else {
      triangle_rule(p0, p1, p2, qp);
    }
    // Barycentric coordinates for the hat functions.
    const Vec2 u = p1 - p0, v = p2 - p0;
    const double det = u.x() * v.y() - u.y() * v.x();
    for (const auto& q : qp) {
      const Vec2 d = q.x - p0;
      const double l1 = (d.x() * v.y() - d.y() * v.x()) / det;
      const double l2 = (u.x() * d.y() - u.y() * d.x()) / det;
      const double l0 = 1.0 - l1 - l2;
      const double val = q.w * a_(q.x) * f(q.x);
      b[T[0]] += l0 * val;
      b[T[1]] += l1 * val;
      b[T[2]] += l2 * val;
    }
  }
  return b;
}

Field EllipticOperator::boundary_load(const Flux& g) const {
  const Mesh& mesh = *mesh_;
  Field b = Field::Zero(mesh.num_nodes());
  const GaussRule& gr = gauss_legendre(8);
  const double dth = 2.0 * std::numbers::pi / mesh.nt;
  for (int j = 0; j < mesh.nt; ++j) {
    const int i0 = mesh.boundary_nodes[j];
    const int i1 = mesh.boundary_nodes[(j + 1) % mesh.nt];
    const double th0 = j * dth;
    for (std::size_t k = 0; k < gr.x.size(); ++k) {
      const double th = th0 + gr.x[k] * dth;
      const Vec2 X = mesh.domain.boundary_point(th);
      const double ds = mesh.domain.boundary_tangent(th).norm() * dth * gr.w[k];
      const double val = ds * a_(X) * g(X, boundary_normal(mesh.domain, th));
      b[i0] += (1.0 - gr.x[k]) * val;
      b[i1] += gr.x[k] * val;
    }
  }
  return b;
}

Field EllipticOperator::recovered_flux(const Field& u, const Field& interior) const {
  const Field r = A_ * u - interior;
  Field flux = Field::Zero(u.size());
  for (int id : mesh_->boundary_nodes) flux[id] = r[id] / bweight_[id];
  return flux;
}

}  // namespace spikekit
