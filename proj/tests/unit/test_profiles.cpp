#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "spikekit/profiles.hpp"

using namespace spikekit;

namespace {

constexpr double kPi = std::numbers::pi;

// Random non-integer α in (−1, 3).
double random_alpha(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-0.95, 2.95);
  for (;;) {
    const double a = U(rng);
    if (std::abs(a - std::round(a)) > 0.05) return a;
  }
}

// Five-point Laplacian of f at z with step h.
template <class F>
double fd_laplacian(F&& f, const Vec2& z, double h) {
  return (f(z + Vec2(h, 0)) + f(z - Vec2(h, 0)) + f(z + Vec2(0, h)) + f(z - Vec2(0, h)) - 4 * f(z)) / (h * h);
}

// Fourth-order nine-point-per-axis Laplacian for tighter residual checks.
template <class F>
double fd_laplacian4(F&& f, const Vec2& z, double h) {
  auto d2 = [&](const Vec2& e) {
    return (-f(z + 2 * h * e) + 16 * f(z + h * e) - 30 * f(z) + 16 * f(z - h * e) - f(z - 2 * h * e)) / (12 * h * h);
  };
  return d2(Vec2(1, 0)) + d2(Vec2(0, 1));
}

SpikeConfig one_spike(double eps) {
  SpikeConfig c;
  c.eps = eps;
  c.alpha = 0.5;
  c.m = 1;
  c.l = 1;
  c.xi = {Vec2(0.3, 0.1)};
  c.b = {1, -1};
  c.d = 0.5;
  return c;
}

}  // namespace

TEST(Profiles, BubbleAtQ) {
  SpikeConfig c;
  c.eps = 1.0;
  c.alpha = 0.5;
  EXPECT_NEAR(bubble_u0(c.q, c, 1.0), std::log(18.0), 1e-14);
  double prev = bubble_u0(c.q, c, 1.0);
  for (double r : {0.1, 0.5, 1.0, 3.0, 10.0}) {
    const double v = bubble_u0(Vec2(r, 0), c, 1.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Profiles, BubbleAtSpike) {
  SpikeConfig c;
  c.eps = 1.0;
  c.alpha = 0.5;
  c.m = 1;
  c.l = 1;
  c.xi = {Vec2(1, 0)};
  c.b = {1, 1};
  EXPECT_NEAR(bubble_ui(c.xi[0], c, 1, 1.0), std::log(8.0), 1e-14);
  // radial symmetry about ξ
  const double r = 0.37;
  const double v0 = bubble_ui(c.xi[0] + Vec2(r, 0), c, 1, 0.8);
  for (double th : {0.3, 1.1, 2.9, 4.4}) EXPECT_NEAR(bubble_ui(c.xi[0] + r * Vec2(std::cos(th), std::sin(th)), c, 1, 0.8), v0, 1e-13);
}

TEST(Profiles, BubbleLaplaciansSatisfyLiouville) {
  // Points within a few core radii, where the Laplacian is O(1/δ²) and
  // finite differences are not swamped by rounding.
  const SpikeConfig c = one_spike(1e-3);
  const double mu0 = 2.0, mu1 = 1.5;
  const double d0 = std::pow(c.eps, 1 / (1 + c.alpha)) * mu0, d1 = c.eps * mu1;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> T(0.2, 5.0), A(0, 2 * kPi);
  for (int k = 0; k < 20; ++k) {
    const double t = T(rng), th = A(rng);
    const Vec2 e(std::cos(th), std::sin(th));
    const Vec2 x = c.q + d0 * t * e;
    const double lap0 = fd_laplacian4([&](const Vec2& z) { return bubble_u0(z, c, mu0); }, x, 1e-2 * d0 * t);
    const double ex0 = bubble_u0_laplacian(x, c, mu0);
    EXPECT_NEAR(lap0, ex0, 1e-5 * std::abs(ex0) + 1e-7) << "x=" << x.transpose();
    const Vec2 y = c.xi[0] + d1 * t * e;
    const double lap1 = fd_laplacian4([&](const Vec2& z) { return bubble_ui(z, c, 1, mu1); }, y, 1e-2 * d1 * t);
    const double ex1 = bubble_ui_laplacian(y, c, 1, mu1);
    EXPECT_NEAR(lap1, ex1, 1e-5 * std::abs(ex1) + 1e-7) << "y=" << y.transpose();
    // closed forms of the right-hand sides
    EXPECT_NEAR(ex0, -c.eps * c.eps * std::pow((x - c.q).norm(), 2 * c.alpha) * std::exp(bubble_u0(x, c, mu0)),
                1e-12 * std::abs(ex0));
    EXPECT_NEAR(ex1, -c.eps * c.eps * std::pow((c.xi[0] - c.q).norm(), 2 * c.alpha) * std::exp(bubble_ui(y, c, 1, mu1)),
                1e-12 * std::abs(ex1));
  }
}

TEST(Profiles, BubbleGradients) {
  const SpikeConfig c = one_spike(0.05);
  const MuVector mu{{1.3, 0.7}};
  const Vec2 x(0.21, -0.13);
  const double h = 1e-6;
  for (int i = 0; i <= 1; ++i) {
    const Vec2 fd((bubble(x + Vec2(h, 0), c, mu, i) - bubble(x - Vec2(h, 0), c, mu, i)) / (2 * h),
                  (bubble(x + Vec2(0, h), c, mu, i) - bubble(x - Vec2(0, h), c, mu, i)) / (2 * h));
    EXPECT_LT((fd - bubble_grad(x, c, mu, i)).norm(), 1e-6 * fd.norm() + 1e-8);
  }
}

TEST(Profiles, KernelSpecialValues) {
  for (double alpha : {0.5, -0.3, 1.7}) {
    const KernelValues on = kernels(Vec2(0.6, 0.8), alpha);
    EXPECT_NEAR(on.z0, 0.0, 1e-15);
    EXPECT_NEAR(on.ztilde, 0.0, 1e-15);
    const KernelValues at0 = kernels(Vec2::Zero(), alpha);
    EXPECT_EQ(at0.z0, -1.0);
    EXPECT_EQ(at0.ztilde, -1.0);
    EXPECT_EQ(at0.z1, 0.0);
    EXPECT_EQ(at0.z2, 0.0);
  }
}

TEST(Profiles, KernelsSolveLinearizedEquations) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> R(0.2, 3.0), T(0, 2 * kPi);
  for (int trial = 0; trial < 10; ++trial) {
    const double alpha = random_alpha(rng);
    const double a1 = 1 + alpha;
    for (int k = 0; k < 50; ++k) {
      const double r = R(rng), th = T(rng);
      const Vec2 z(r * std::cos(th), r * std::sin(th));
      const double h = 1e-3 * r;
      const double rr = z.squaredNorm();
      const double lap0 = fd_laplacian4([&](const Vec2& y) { return kernels(y, alpha).z0; }, z, h);
      EXPECT_NEAR(lap0 + 8 / ((1 + rr) * (1 + rr)) * kernels(z, alpha).z0, 0.0, 1e-6);
      const double ra = std::pow(r, 2 * a1);
      const double pot = 8 * a1 * a1 * std::pow(r, 2 * alpha) / ((1 + ra) * (1 + ra));
      const double lapt = fd_laplacian4([&](const Vec2& y) { return kernels(y, alpha).ztilde; }, z, h);
      EXPECT_NEAR(lapt + pot * kernels(z, alpha).ztilde, 0.0, 1e-5) << "alpha=" << alpha << " r=" << r;
      // Z₁, Z₂ solve the same equation as Z₀
      const double lap1 = fd_laplacian4([&](const Vec2& y) { return kernels(y, alpha).z1; }, z, h);
      EXPECT_NEAR(lap1 + 8 / ((1 + rr) * (1 + rr)) * kernels(z, alpha).z1, 0.0, 1e-6);
    }
  }
}

TEST(Profiles, StandardIntegralsClosedForms) {
  const auto s0 = standard_integrals(0.0);
  EXPECT_NEAR(s0[0], 8 * kPi, 1e-12);
  EXPECT_NEAR(s0[1], 8 * kPi, 1e-12);
  EXPECT_NEAR(s0[2], 8 * kPi * (std::log(8.0) - 2), 1e-12);
  EXPECT_NEAR(s0[3], 8 * kPi * (std::log(8.0) - 2), 1e-12);
  EXPECT_NEAR(standard_integrals(0.5)[1], 12 * kPi, 1e-12);
}

TEST(Profiles, StandardIntegralsQuadratureSelfCheck) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 10; ++k) {
    const double alpha = random_alpha(rng);
    const auto closed = standard_integrals(alpha);
    const auto quad = standard_integrals_quadrature(alpha);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(quad[j], closed[j], 1e-6 * std::abs(closed[j])) << "alpha=" << alpha << " j=" << j;
  }
}

TEST(Profiles, ConfigValidation) {
  SpikeConfig c = one_spike(1e-3);
  EXPECT_NO_THROW(c.validate());
  c.alpha = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = one_spike(1e-3);
  c.mode = Nonlinearity::Exp;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.b = {1, 1};
  EXPECT_NO_THROW(c.validate());
  c.b = {1, 2};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_DOUBLE_EQ(one_spike(1e-3).kappa(), 1 * (3 + 0.5 + 1));
  EXPECT_NEAR(one_spike(1e-3).c(0), 12 * kPi, 1e-12);
  EXPECT_NEAR(one_spike(1e-3).c(1), 8 * kPi, 1e-12);
}

TEST(Profiles, NormParamsDefaultsAndExclusions) {
  for (double alpha : {0.5, -0.5, 1.5, 2.5}) {
    const NormParams np = NormParams::defaults(alpha);
    EXPECT_NO_THROW(np.validate(alpha));
    EXPECT_LT(np.alpha_hat, alpha);
  }
  // α = −1/4 puts 1/(1+α) = 4/3 in range; p near it is nudged
  NormParams np = NormParams::defaults(0.5);
  np.p = 1.0 / 1.5;
  EXPECT_THROW(np.validate(0.5), std::invalid_argument);
  np = NormParams::defaults(-0.25);
  EXPECT_NO_THROW(np.validate(-0.25));
  np.p = 4.0 / 3.0;
  EXPECT_THROW(np.validate(-0.25), std::invalid_argument);
  np = NormParams::defaults(0.5);
  np.beta = 0.5;
  EXPECT_THROW(np.validate(0.5), std::invalid_argument);
  EXPECT_NEAR(NormParams::defaults(0.5).residual_exponent(0.5), 1.0 / 3.0, 1e-12);
}

TEST(Profiles, AdmissibilityExamples) {
  const DomainSpec d = DomainSpec::unit_disk();
  SpikeConfig c;
  c.eps = 1e-3;
  c.alpha = 0.5;
  c.m = 2;
  c.l = 2;
  c.b = {1, -1, -1};
  c.d = 0.5;
  c.xi = {Vec2(0.1, 0), Vec2(0.1, 0)};
  auto rep = check_admissible(c, d);
  EXPECT_FALSE(rep.admissible);
  bool sep_negative = false;
  for (const auto& m : rep.margins)
    if (m.name.rfind("pair_separation", 0) == 0) sep_negative = m.margin < 0;
  EXPECT_TRUE(sep_negative);

  c.xi = {c.q, Vec2(0.1, 0)};
  EXPECT_FALSE(check_admissible(c, d).admissible);

  // regular triangle of radius 1/|log ε|
  c.m = 3;
  c.l = 3;
  c.b = {1, -1, -1, -1};
  const double r = 1 / std::abs(std::log(c.eps));
  c.xi.clear();
  for (int k = 0; k < 3; ++k) c.xi.push_back(r * Vec2(std::cos(2 * kPi * k / 3), std::sin(2 * kPi * k / 3)));
  EXPECT_TRUE(check_admissible(c, d).admissible);
}

TEST(Profiles, AdmissibilityMonotoneInEps) {
  const DomainSpec d = DomainSpec::unit_disk();
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> U(-0.2, 0.2);
  for (int k = 0; k < 50; ++k) {
    SpikeConfig c;
    c.alpha = 0.5;
    c.m = 2;
    c.l = 2;
    c.b = {1, 1, 1};
    c.d = 0.25;
    c.xi = {Vec2(U(rng), U(rng)), Vec2(U(rng), U(rng))};
    bool was = false;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-5, 1e-8}) {
      c.eps = eps;
      const bool now = check_admissible(c, d).admissible;
      if (was) EXPECT_TRUE(now);
      was = now;
    }
  }
}
