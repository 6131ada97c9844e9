#include "spikekit/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include <boost/math/special_functions/legendre.hpp>

namespace spikekit {

const GaussRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  // boost returns the non-negative zeros of P_n in increasing order.
  const auto zeros = boost::math::legendre_p_zeros<double>(n);
  GaussRule r;
  auto add = [&](double z) {
    const double dp = boost::math::legendre_p_prime(n, z);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    r.x.push_back(0.5 * (1.0 + z));
    r.w.push_back(0.5 * w);
  };
  for (auto rit = zeros.rbegin(); rit != zeros.rend(); ++rit)
    if (*rit > 0) add(-*rit);
  for (double z : zeros) add(z);
  return cache.emplace(n, std::move(r)).first->second;
}

void triangle_rule(const Vec2& a, const Vec2& b, const Vec2& c, std::vector<QuadPoint>& out) {
  // Dunavant degree-5 rule in barycentric coordinates.
  static const double w0 = 0.225;
  static const double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
  static const double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
  const Vec2 u = b - a, v = c - a;
  const double area = 0.5 * std::abs(u.x() * v.y() - u.y() * v.x());
  auto push = [&](double l0, double l1, double l2, double w) {
    out.push_back({l0 * a + l1 * b + l2 * c, w * area});
  };
  push(1.0 / 3, 1.0 / 3, 1.0 / 3, w0);
  push(a1, b1, b1, w1);
  push(b1, a1, b1, w1);
  push(b1, b1, a1, w1);
  push(a2, b2, b2, w2);
  push(b2, a2, b2, w2);
  push(b2, b2, a2, w2);
}

Vec2 closest_point_on_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  auto cr = [](const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); };
  const double s = cr(b - a, c - a);
  const double d0 = cr(b - a, p - a), d1 = cr(c - b, p - b), d2 = cr(a - c, p - c);
  if ((s > 0 && d0 >= 0 && d1 >= 0 && d2 >= 0) || (s < 0 && d0 <= 0 && d1 <= 0 && d2 <= 0)) return p;
  auto seg = [&](const Vec2& u, const Vec2& v) {
    const Vec2 e = v - u;
    const double t = std::clamp((p - u).dot(e) / e.squaredNorm(), 0.0, 1.0);
    return Vec2(u + t * e);
  };
  Vec2 best = seg(a, b);
  for (const Vec2& cand : {seg(b, c), seg(c, a)})
    if ((cand - p).squaredNorm() < (best - p).squaredNorm()) best = cand;
  return best;
}

namespace {
void duffy(const Vec2& apex, const Vec2& b, const Vec2& c, int n, std::vector<QuadPoint>& out) {
  const Vec2 u = b - apex, v = c - apex;
  const double area2 = std::abs(u.x() * v.y() - u.y() * v.x());
  if (area2 <= 1e-30 * std::max(u.squaredNorm(), v.squaredNorm())) return;
  const GaussRule& g = gauss_legendre(n);
  for (int i = 0; i < n; ++i) {
    const double r = g.x[i];
    for (int j = 0; j < n; ++j) {
      const double t = g.x[j];
      const Vec2 x = apex + r * ((1 - t) * u + t * v);
      out.push_back({x, g.w[i] * g.w[j] * r * area2});
    }
  }
}
}  // namespace

void triangle_rule_singular(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& s, int n,
                            std::vector<QuadPoint>& out) {
  const Vec2 p = closest_point_on_triangle(s, a, b, c);
  duffy(p, a, b, n, out);
  duffy(p, b, c, n, out);
  duffy(p, c, a, n, out);
}

}  // namespace spikekit
