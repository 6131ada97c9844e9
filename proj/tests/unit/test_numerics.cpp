#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "spikekit/fem.hpp"
#include "spikekit/interp.hpp"
#include "spikekit/quadrature.hpp"
#include "spikekit/report.hpp"

using namespace spikekit;

TEST(Quadrature, GaussLegendreExactForPolynomials) {
  const GaussRule& g = gauss_legendre(6);
  for (int p = 0; p <= 11; ++p) {
    double s = 0;
    for (std::size_t k = 0; k < g.x.size(); ++k) s += g.w[k] * std::pow(g.x[k], p);
    EXPECT_NEAR(s, 1.0 / (p + 1), 1e-14);
  }
}

TEST(Quadrature, TriangleRuleDegreeFive) {
  std::vector<QuadPoint> q;
  triangle_rule(Vec2(0, 0), Vec2(1, 0), Vec2(0, 1), q);
  double s = 0;
  for (const auto& p : q) s += p.w * std::pow(p.x.x(), 2) * std::pow(p.x.y(), 3);
  EXPECT_NEAR(s, 2.0 * 6.0 / 5040.0, 1e-15);  // 2!3!/7!
}

TEST(Quadrature, SingularRuleHandlesLogAndInverse) {
  // ∫ over the right triangle with the singular point at the origin vertex.
  std::vector<QuadPoint> q;
  triangle_rule_singular(Vec2(0, 0), Vec2(1, 0), Vec2(0, 1), Vec2(0, 0), 12, q);
  double inv = 0;
  for (const auto& p : q) inv += p.w / p.x.norm();
  // ∫_0^{π/2} ∫_0^{1/(cos+sin)} dr dθ = √2 ln(1+√2)
  EXPECT_NEAR(inv, std::sqrt(2.0) * std::log(1 + std::sqrt(2.0)), 1e-9);

  // Interior singular point: ∫ log|x−s| converges under refinement of the rule.
  const Vec2 s(0.3, 0.2);
  auto log_integral = [&](int n) {
    q.clear();
    triangle_rule_singular(Vec2(0, 0), Vec2(1, 0), Vec2(0, 1), s, n, q);
    double lg = 0, area = 0;
    for (const auto& p : q) lg += p.w * std::log((p.x - s).norm()), area += p.w;
    EXPECT_NEAR(area, 0.5, 1e-14);
    return lg;
  };
  const double ref = log_integral(64);
  const double e12 = std::abs(log_integral(12) - ref), e24 = std::abs(log_integral(24) - ref);
  EXPECT_LT(e12, 1e-4 * std::abs(ref));
  EXPECT_LT(e24, 0.5 * e12);
}

TEST(Quadrature, ClosestPoint) {
  EXPECT_LT((closest_point_on_triangle(Vec2(2, 2), Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)) - Vec2(0.5, 0.5)).norm(), 1e-15);
  EXPECT_EQ(closest_point_on_triangle(Vec2(0.1, 0.1), Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)), Vec2(0.1, 0.1));
}

TEST(Interpolation, ExactAtNodesAndAccurateBetween) {
  const Mesh m = build_mesh(DomainSpec::ellipse(1.5, 1.0), 48, 96, 2.0);
  auto f = [](const Vec2& x) { return std::sin(x.x()) * std::exp(0.5 * x.y()); };
  Field v(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i) v[i] = f(m.nodes[i]);
  const FieldInterpolator I(m, v);
  for (int i : {0, 17, 333, m.num_nodes() - 1}) EXPECT_NEAR(I.value(m.nodes[i]), v[i], 1e-13);
  for (const Vec2& x : {Vec2(0.31, -0.22), Vec2(-1.1, 0.4), Vec2(0.001, 0.002)}) {
    EXPECT_NEAR(I.value(x), f(x), 5e-5);
    const Vec2 g(std::cos(x.x()) * std::exp(0.5 * x.y()), 0.5 * f(x));
    EXPECT_LT((I.gradient(x) - g).norm(), 1e-3);
  }
  EXPECT_THROW(I.value(Vec2(3, 0)), std::out_of_range);
}

TEST(Fem, OperatorAnnihilatesNothingAndIsSymmetric) {
  const Mesh m = build_mesh(DomainSpec::unit_disk(), 16, 32, 1.0);
  const EllipticOperator op(m, AnisotropyField::gaussian(0.3, 0.5, Vec2::Zero()));
  const SpMat& A = op.matrix();
  EXPECT_LT((SpMat(A.transpose()) - A).norm(), 1e-14 * A.norm());
  // Constants: A·1 = a·m (no stiffness contribution).
  const Field one = Field::Ones(m.num_nodes());
  EXPECT_LT((op.apply(one) - op.mass()).cwiseAbs().maxCoeff(), 1e-12);
  const Field x = op.solve(op.mass());
  EXPECT_LT((x - one).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Fem, SmoothSolutionConverges) {
  // −Δu + u = f with u = cos(π r²), which satisfies ∂u/∂n = 0 on the unit disk.
  auto u = [](const Vec2& x) { return std::cos(std::numbers::pi * x.squaredNorm()); };
  auto f = [&](const Vec2& x) {
    const double r2 = x.squaredNorm(), p = std::numbers::pi;
    // Δ cos(πr²) = −4π sin(πr²) − 4π² r² cos(πr²)
    return 4 * p * std::sin(p * r2) + 4 * p * p * r2 * std::cos(p * r2) + u(x);
  };
  double prev = 0;
  for (int nr : {16, 32, 64}) {
    const Mesh m = build_mesh(DomainSpec::unit_disk(), nr, 2 * nr, 0.0);
    const EllipticOperator op(m, AnisotropyField::constant(1.0));
    const Field sol = op.solve(op.interior_load(f, {}));
    double err = 0;
    for (int i = 0; i < m.num_nodes(); ++i) err = std::max(err, std::abs(sol[i] - u(m.nodes[i])));
    if (prev > 0) EXPECT_LT(err, 0.35 * prev);  // second order
    prev = err;
  }
  EXPECT_LT(prev, 0.02);
}

TEST(Report, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Report, Fmt17RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 123456789.123456789}) EXPECT_EQ(std::stod(fmt17(v)), v);
}

TEST(Report, LogLogSlope) {
  const SlopeFit f = loglog_slope({1e-1, 1e-2, 1e-3}, {3e-2, 3e-4, 3e-6});
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-9);
  EXPECT_THROW(loglog_slope({1.0}, {1.0}), std::invalid_argument);
}

TEST(Report, CsvAndFieldDump) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto csv = (dir / "spikekit_report_test.csv").string();
  {
    CsvWriter w(csv);
    w.header({"a", "b", "c"});
    w.cell(0.1).cell(3).cell(std::string("x"));
    w.end_row();
  }
  std::ifstream in(csv);
  std::string l1, l2;
  std::getline(in, l1);
  std::getline(in, l2);
  EXPECT_EQ(l1, "a,b,c");
  EXPECT_EQ(l2, "0.10000000000000001,3,x");
  std::filesystem::remove(csv);

  const Mesh m = build_mesh(DomainSpec::unit_disk(), 16, 32);
  const Field f = Field::LinSpaced(m.num_nodes(), 0, 1);
  const auto bin = (dir / "spikekit_dump_test.bin").string();
  write_field_dump(bin, m, {"f"}, {&f});
  EXPECT_GT(std::filesystem::file_size(bin), static_cast<std::uintmax_t>(8 * m.num_nodes()));
  std::filesystem::remove(bin);
}
