#pragma once

#include <vector>

#include "spikekit/geometry.hpp"

namespace spikekit {

struct QuadPoint {
  Vec2 x;
  double w;
};

// Gauss–Legendre nodes and weights on [0, 1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};
const GaussRule& gauss_legendre(int n);

// Degree-5 seven-point rule on the triangle (a, b, c).
void triangle_rule(const Vec2& a, const Vec2& b, const Vec2& c, std::vector<QuadPoint>& out);

// Rule for integrands singular (or sharply peaked) at `s`: the triangle is
// split at the point of the triangle closest to `s` and each piece is
// integrated with an n×n Duffy-collapsed Gauss rule. Integrable singularities
// of type log|x−s| and |x−s|^(−1) are handled to high accuracy.
void triangle_rule_singular(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& s, int n,
                            std::vector<QuadPoint>& out);

// Closest point of the triangle (a, b, c) to p.
Vec2 closest_point_on_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c);

}  // namespace spikekit
