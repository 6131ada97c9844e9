#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spikekit {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class DomainKind { Disk, Ellipse, Star };

std::string to_string(DomainKind kind);

// Star-shaped domain described in polar form about `pole`:
//   boundary(θ) = pole + ρ(θ) (cos θ, sin θ).
// A disk may have its pole away from its center; ellipses and stars use the
// center as pole.
struct DomainSpec {
  DomainKind kind = DomainKind::Disk;
  Vec2 center = Vec2::Zero();
  Vec2 pole = Vec2::Zero();
  double radius = 1.0;
  double ax = 1.0;
  double ay = 1.0;
  // Star radius function: ρ(θ) = c[0] + Σ_k c[2k-1] cos kθ + c[2k] sin kθ.
  std::vector<double> fourier;

  static DomainSpec unit_disk();
  static DomainSpec disk(const Vec2& center, double radius, const Vec2& pole);
  static DomainSpec ellipse(double ax, double ay, const Vec2& center = Vec2::Zero());
  static DomainSpec star(std::vector<double> coeffs, const Vec2& center = Vec2::Zero());

  struct RadialJet {
    double rho;
    double drho;
    double ddrho;
  };
  RadialJet radius_jet(double theta) const;
  double rho(double theta) const { return radius_jet(theta).rho; }

  Vec2 boundary_point(double theta) const;
  Vec2 boundary_tangent(double theta) const;
  double curvature(double theta) const;

  // Polar angle of x about the pole, in [0, 2π).
  double angle_of(const Vec2& x) const;
  // |x − pole| / ρ(θ(x)); < 1 inside, 1 on the boundary.
  double normalized_radius(const Vec2& x) const;
  bool contains(const Vec2& x, double tol = 0.0) const;

  // Closest boundary point; the boundary angle is written to `theta_out`.
  Vec2 nearest_boundary_point(const Vec2& x, double* theta_out = nullptr) const;
  double distance_to_boundary(const Vec2& x) const;

  double area() const;
  // Throws std::invalid_argument on ρ ≤ 0 or malformed parameters.
  void validate() const;
};

Vec2 boundary_normal(const DomainSpec& domain, double theta);

struct Mesh {
  DomainSpec domain;
  int nr = 0;
  int nt = 0;
  double grading = 0.0;

  std::vector<Vec2> nodes;
  std::vector<double> s;      // computational radial coordinate in [0, 1]
  std::vector<double> theta;  // angular coordinate
  // Columns are ∂x/∂s and ∂x/∂θ of the polar map.
  std::vector<Mat2> metric;
  std::vector<std::array<int, 3>> triangles;
  std::vector<double> tri_area;
  std::vector<double> cell_area;  // lumped (barycentric) area per node
  std::vector<int> boundary_nodes;
  std::vector<Vec2> boundary_normals;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int node_index(int ring, int j) const;
  int ring_of(int node) const;
  bool is_boundary(int node) const { return ring_of(node) == nr; }

  double radial_map(double s) const;
  double radial_map_derivative(double s) const;
  double radial_map_inverse(double rhat) const;
  Vec2 map(double s, double theta) const;

  double total_area() const;
  int nearest_node(const Vec2& x) const;
  int nearest_boundary_node(const Vec2& x) const;
  // Mesh-neighbour lists (nodes sharing a triangle edge).
  std::vector<std::vector<int>> adjacency() const;
  // Typical edge length near x.
  double local_spacing(const Vec2& x) const;
  // Index of a triangle containing x, or -1.
  int locate(const Vec2& x) const;
};

// Structured triangulation of the polar map: ring 0 is the collapsed pole,
// ring nr lies on the boundary. `grading` > 0 clusters rings near the pole via
// r̂(s) = sinh(g s)/sinh(g).
Mesh build_mesh(const DomainSpec& domain, int nr, int nt, double grading = 0.0);

// Local boundary flattening at a boundary point ξ.
struct StraightenMap {
  DomainSpec domain;
  Vec2 xi = Vec2::Zero();
  double theta_xi = 0.0;
  Mat2 A = Mat2::Identity();  // rotation taking the outward normal to (0, -1)
  double delta2 = 0.0;        // validity radius

  Vec2 to_local(const Vec2& x) const { return A * (x - xi); }
  // Graph function of the rotated boundary, x₂ = G(x₁), and its derivative.
  double G(double t) const;
  double dG(double t) const;
  Vec2 apply_local(const Vec2& z) const;
  Vec2 apply(const Vec2& x) const { return apply_local(to_local(x)); }
  Mat2 jacobian_local(const Vec2& z) const;

 private:
  double solve_param(double t) const;
};

StraightenMap straighten(const DomainSpec& domain, const Vec2& xi);

// Default size of the ball B_d(q): dist(q, ∂Ω)/20 for interior q and
// δ₂/20 for boundary q.
double default_d(const DomainSpec& domain, const Vec2& q, bool boundary_q);

}  // namespace spikekit
