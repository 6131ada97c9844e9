#pragma once

#include <string>

#include "spikekit/geometry.hpp"

namespace spikekit {

enum class AnisotropyKind { Constant, Gaussian, Cosine };

std::string to_string(AnisotropyKind kind);

// Closed-form coefficient a(x) with a designated maximum point q.
//   constant:  a = value
//   gaussian:  a = value + A exp(−(|x−q|/s)^k), k = power (2 by default)
//   cosine:    a = value + A cos²(π|x−q|/(2s)) for |x−q| < s, value otherwise
struct AnisotropyField {
  AnisotropyKind kind = AnisotropyKind::Constant;
  double value = 1.0;
  double amplitude = 0.0;
  double width = 1.0;
  double power = 2.0;
  Vec2 q = Vec2::Zero();
  bool q_on_boundary = false;

  static AnisotropyField constant(double c, const Vec2& q = Vec2::Zero(), bool boundary = false);
  static AnisotropyField gaussian(double amplitude, double width, const Vec2& q, bool boundary = false,
                                  double power = 2.0);
  static AnisotropyField cosine(double amplitude, double width, const Vec2& q, bool boundary = false);

  double operator()(const Vec2& x) const;
  Vec2 gradient(const Vec2& x) const;
  Vec2 grad_log(const Vec2& x) const { return gradient(x) / (*this)(x); }

  // Throws std::invalid_argument when a is not positive at some node, when
  // q is not a strict local maximum on B_d(q) (constant a is exempt), or when ∂_n a(q) ≠ 0 for a
  // boundary q.
  void validate(const Mesh& mesh, double d) const;
};

}  // namespace spikekit
