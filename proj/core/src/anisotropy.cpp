#include "spikekit/anisotropy.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace spikekit {

std::string to_string(AnisotropyKind kind) {
  switch (kind) {
    case AnisotropyKind::Constant: return "constant";
    case AnisotropyKind::Gaussian: return "gaussian";
    case AnisotropyKind::Cosine: return "cosine";
  }
  return "unknown";
}

AnisotropyField AnisotropyField::constant(double c, const Vec2& q, bool boundary) {
  AnisotropyField a;
  a.kind = AnisotropyKind::Constant;
  a.value = c;
  a.q = q;
  a.q_on_boundary = boundary;
  return a;
}

AnisotropyField AnisotropyField::gaussian(double amplitude, double width, const Vec2& q, bool boundary,
                                          double power) {
  AnisotropyField a;
  a.kind = AnisotropyKind::Gaussian;
  a.amplitude = amplitude;
  a.width = width;
  a.power = power;
  a.q = q;
  a.q_on_boundary = boundary;
  return a;
}

AnisotropyField AnisotropyField::cosine(double amplitude, double width, const Vec2& q, bool boundary) {
  AnisotropyField a = gaussian(amplitude, width, q, boundary);
  a.kind = AnisotropyKind::Cosine;
  return a;
}

double AnisotropyField::operator()(const Vec2& x) const {
  switch (kind) {
    case AnisotropyKind::Constant: return value;
    case AnisotropyKind::Gaussian: {
      const double t = (x - q).squaredNorm() / (width * width);
      return value + amplitude * std::exp(-(power == 2.0 ? t : std::pow(t, 0.5 * power)));
    }
    case AnisotropyKind::Cosine: {
      const double r = (x - q).norm();
      if (r >= width) return value;
      const double c = std::cos(0.5 * std::numbers::pi * r / width);
      return value + amplitude * c * c;
    }
  }
  return value;
}

Vec2 AnisotropyField::gradient(const Vec2& x) const {
  switch (kind) {
    case AnisotropyKind::Constant: return Vec2::Zero();
    case AnisotropyKind::Gaussian: {
      const Vec2 d = x - q;
      const double t = d.squaredNorm() / (width * width);
      if (power == 2.0) return -2.0 * amplitude * std::exp(-t) / (width * width) * d;
      if (t == 0.0) return Vec2::Zero();
      // d/dr exp(−(r/s)^k) = −k (r/s)^k / r · exp(−(r/s)^k)
      const double tk = std::pow(t, 0.5 * power);
      return -amplitude * power * tk * std::exp(-tk) / d.squaredNorm() * d;
    }
    case AnisotropyKind::Cosine: {
      const Vec2 d = x - q;
      const double r = d.norm();
      if (r >= width || r == 0.0) return Vec2::Zero();
      const double k = 0.5 * std::numbers::pi / width;
      // d/dr cos²(kr) = −k sin(2kr)
      return -amplitude * k * std::sin(2 * k * r) / r * d;
    }
  }
  return Vec2::Zero();
}

void AnisotropyField::validate(const Mesh& mesh, double d) const {
  const double aq = (*this)(q);
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const double v = (*this)(mesh.nodes[i]);
    if (!(v > 0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << "anisotropy is not positive at node " << i << " (a=" << v << ")";
      throw std::invalid_argument(os.str());
    }
    const double r = (mesh.nodes[i] - q).norm();
    if (kind != AnisotropyKind::Constant && r > 1e-12 && r <= d && !(v < aq)) {
      std::ostringstream os;
      os << "q is not a strict local maximum of a: node " << i << " at distance " << r << " has a=" << v
         << " >= a(q)=" << aq;
      throw std::invalid_argument(os.str());
    }
  }
  if (q_on_boundary) {
    double th = 0.0;
    mesh.domain.nearest_boundary_point(q, &th);
    const double dn = gradient(q).dot(boundary_normal(mesh.domain, th));
    if (std::abs(dn) > 1e-8) {
      std::ostringstream os;
      os << "normal derivative of a at boundary q is " << dn << ", expected 0";
      throw std::invalid_argument(os.str());
    }
  }
}

}  // namespace spikekit
