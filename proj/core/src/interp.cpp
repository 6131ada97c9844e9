#include "spikekit/interp.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/LU>

namespace spikekit {

namespace {
// Cubic Lagrange basis on nodes 0..3 and its derivative at t.
void lagrange4(double t, double w[4], double dw[4]) {
  const double d0 = t, d1 = t - 1, d2 = t - 2, d3 = t - 3;
  w[0] = -d1 * d2 * d3 / 6.0;
  w[1] = d0 * d2 * d3 / 2.0;
  w[2] = -d0 * d1 * d3 / 2.0;
  w[3] = d0 * d1 * d2 / 6.0;
  dw[0] = -(d2 * d3 + d1 * d3 + d1 * d2) / 6.0;
  dw[1] = (d2 * d3 + d0 * d3 + d0 * d2) / 2.0;
  dw[2] = -(d1 * d3 + d0 * d3 + d0 * d1) / 2.0;
  dw[3] = (d1 * d2 + d0 * d2 + d0 * d1) / 6.0;
}

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}
}  // namespace

double FieldInterpolator::node(int ring, int j) const {
  const Mesh& m = *mesh_;
  if (ring == 0) return (*f_)[0];
  if (ring < 0) return (*f_)[m.node_index(-ring, j + m.nt / 2)];
  return (*f_)[m.node_index(ring, j)];
}

std::pair<double, Vec2> FieldInterpolator::eval(const Vec2& x) const {
  const Mesh& m = *mesh_;
  const Vec2 d = x - m.domain.pole;
  const double r = d.norm();
  const double scale = m.domain.rho(0.0);
  if (r < 1e-13 * scale) {
    // Gradient at the pole from a symmetric difference of the interpolant.
    const double h = 1e-5 * scale / m.nr;
    const double gx = (value(x + Vec2(h, 0)) - value(x - Vec2(h, 0))) / (2 * h);
    const double gy = (value(x + Vec2(0, h)) - value(x - Vec2(0, h))) / (2 * h);
    return {(*f_)[0], Vec2(gx, gy)};
  }
  double th = std::atan2(d.y(), d.x());
  if (th < 0) th += 2.0 * std::numbers::pi;
  const auto jet = m.domain.radius_jet(th);
  double shat = r / jet.rho;
  if (shat > 1.0 + 1e-9) {
    std::ostringstream os;
    os << "interpolation point (" << x.x() << ", " << x.y() << ") lies outside the domain";
    throw std::out_of_range(os.str());
  }
  shat = std::min(shat, 1.0);
  const double sv = m.radial_map_inverse(shat);
  const double dth = 2.0 * std::numbers::pi / m.nt;
  const double u = snap(sv * m.nr);
  const double v = snap(th / dth);

  int i0 = static_cast<int>(std::floor(u)) - 1;
  if (i0 + 3 > m.nr) i0 = m.nr - 3;
  const int j0 = static_cast<int>(std::floor(v)) - 1;
  double wr[4], dwr[4], wt[4], dwt[4];
  lagrange4(u - i0, wr, dwr);
  lagrange4(v - j0, wt, dwt);

  double f = 0.0, fu = 0.0, fv = 0.0;
  for (int a = 0; a < 4; ++a) {
    double row = 0.0, rowv = 0.0;
    for (int b = 0; b < 4; ++b) {
      const double val = node(i0 + a, j0 + b);
      row += wt[b] * val;
      rowv += dwt[b] * val;
    }
    f += wr[a] * row;
    fu += dwr[a] * row;
    fv += wr[a] * rowv;
  }
  const double fs = fu * m.nr;
  const double fth = fv / dth;
  const Vec2 e(std::cos(th), std::sin(th)), ep(-std::sin(th), std::cos(th));
  Mat2 J;
  J.col(0) = m.radial_map_derivative(sv) * jet.rho * e;
  J.col(1) = m.radial_map(sv) * (jet.drho * e + jet.rho * ep);
  const Vec2 grad = J.transpose().partialPivLu().solve(Vec2(fs, fth));
  return {f, grad};
}

}  // namespace spikekit
