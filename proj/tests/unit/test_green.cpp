#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "spikekit/green.hpp"
#include "spikekit/report.hpp"

using namespace spikekit;

namespace {

constexpr double kPi = std::numbers::pi;

// Neumann Green function of −Δ+1 on the disk of radius R centred at 0 with
// source at 0: (K₀(r) + K₁(R)/I₁(R) I₀(r)) / 2π.
double bessel_green(double r, double R = 1.0) {
  const double k = std::cyl_bessel_k(1, R) / std::cyl_bessel_i(1, R);
  return (std::cyl_bessel_k(0, r) + k * std::cyl_bessel_i(0, r)) / (2 * kPi);
}

double bessel_robin(double R = 1.0) {
  const double k = std::cyl_bessel_k(1, R) / std::cyl_bessel_i(1, R);
  return (std::log(2.0) - std::numbers::egamma + k) / (2 * kPi);
}

struct Fixture {
  Mesh mesh;
  std::unique_ptr<EllipticOperator> op;
  Fixture(const DomainSpec& d, const AnisotropyField& a, int nr, double grading = 0.0)
      : mesh(build_mesh(d, nr, 2 * nr, grading)), op(std::make_unique<EllipticOperator>(mesh, a)) {}
};

AnisotropyField bump() { return AnisotropyField::gaussian(0.5, 0.4, Vec2::Zero()); }

}  // namespace

TEST(Green, BesselOracleUnitDisk) {
  Fixture f(DomainSpec::unit_disk(), AnisotropyField::constant(1.0), 128);
  const GreenField g = solve_green(*f.op, Vec2::Zero(), SourceLocation::Interior);
  double err = 0;
  for (int i = 0; i < f.mesh.num_nodes(); ++i) {
    const double r = f.mesh.nodes[i].norm();
    if (r < 0.05 || r > 0.95) continue;
    err = std::max(err, std::abs(g.H[i] - std::log(r) / (2 * kPi) - bessel_green(r)));
  }
  EXPECT_LT(err, 2e-4);
  EXPECT_NEAR(g.robin, bessel_robin(), 1e-3);
}

TEST(Green, BesselOracleLargerDisk) {
  Fixture f(DomainSpec::disk(Vec2::Zero(), 3.0, Vec2::Zero()), AnisotropyField::constant(1.0), 128, 3.0);
  const GreenField g = solve_green(*f.op, Vec2::Zero(), SourceLocation::Interior);
  EXPECT_NEAR(g.robin, bessel_robin(3.0), 1e-3);
}

TEST(Green, RobinConvergesUnderRefinement) {
  const auto a = bump();
  Fixture c(DomainSpec::unit_disk(), a, 64), fine(DomainSpec::unit_disk(), a, 128);
  const Vec2 y(0.2, -0.1);
  const double r1 = solve_green(*c.op, y, SourceLocation::Interior).robin;
  const double r2 = solve_green(*fine.op, y, SourceLocation::Interior).robin;
  EXPECT_LT(std::abs(r1 - r2), 1e-3);
}

TEST(Green, WeakNormalizationAgainstConstant) {
  // ∫ a G(·, y) = a(y): integrate −div(a∇G) + aG = a(y)δ_y against 1.
  const auto a = bump();
  Fixture f(DomainSpec::unit_disk(), a, 96);
  GreenTable t(*f.op);
  const Vec2 y(0.25, 0.1);
  const int id = t.add(y, SourceLocation::Interior);
  const double c = t.source(id).c();
  const Field b = f.op->interior_load(
      [&](const Vec2& x) {
        const double r = (x - y).norm();
        return t.H(x, id) - c * std::log(std::max(r, 1e-300));
      },
      {y});
  EXPECT_NEAR(b.sum() / a(y), 1.0, 0.01);
}

TEST(Green, LogCoefficientInteriorAndBoundary) {
  const auto a = bump();
  Fixture f(DomainSpec::unit_disk(), a, 128, 2.0);
  GreenTable t(*f.op);
  const Vec2 yi(0.3, 0.1);
  const int ii = t.add(yi, SourceLocation::Interior);
  const int ib = t.add(Vec2(1, 0), SourceLocation::Boundary);
  const Vec2 yb = t.source(ib).y;
  auto fit = [&](int id, const Vec2& y, const Vec2& dir) {
    // slope of G against log r over four dyadic radii
    std::vector<double> lr, g;
    for (double r : {0.04, 0.02, 0.01, 0.005}) {
      lr.push_back(std::log(r));
      g.push_back(t.G(y + r * dir, id));
    }
    double mx = 0, my = 0;
    for (int k = 0; k < 4; ++k) mx += lr[k] / 4, my += g[k] / 4;
    double sxy = 0, sxx = 0;
    for (int k = 0; k < 4; ++k) sxy += (lr[k] - mx) * (g[k] - my), sxx += (lr[k] - mx) * (lr[k] - mx);
    return sxy / sxx;
  };
  EXPECT_NEAR(fit(ii, yi, Vec2(0.6, 0.8)), -1 / (2 * kPi), 0.05 / (2 * kPi));
  EXPECT_NEAR(fit(ib, yb, -yb.normalized()), -1 / kPi, 0.05 / kPi);
}

TEST(Green, PairEvaluation) {
  Fixture f(DomainSpec::unit_disk(), bump(), 64);
  GreenTable t(*f.op);
  const Vec2 y(0.1, 0.2);
  const int id = t.add(y, SourceLocation::Interior);
  const int node = 200;
  const GreenPair p = green_pair_eval(t, f.mesh.nodes[node], id);
  EXPECT_DOUBLE_EQ(p.H, t.source(id).H[node]);
  EXPECT_TRUE(std::isfinite(t.H(y, id)));
  EXPECT_NEAR(t.H(y, id), t.robin(id), 1e-12);
  EXPECT_THROW(t.G(y, id), std::domain_error);
  EXPECT_THROW(green_pair_eval(t, Vec2(2, 0), id), std::out_of_range);
}

TEST(Green, SymmetryIsotropic) {
  Fixture f(DomainSpec::unit_disk(), AnisotropyField::constant(1.0), 128);
  GreenTable t(*f.op);
  const int a = t.add(Vec2(0.3, 0), SourceLocation::Interior);
  const int b = t.add(Vec2(-0.3, 0), SourceLocation::Interior);
  EXPECT_LT(check_symmetry(t, a, b), 1e-3);
  EXPECT_EQ(check_symmetry(t, a, a), 0.0);
  EXPECT_EQ(t.add(Vec2(0.3, 0), SourceLocation::Interior), a);  // deduplicated
}

TEST(Green, SymmetryBumpImprovesUnderRefinement) {
  const auto a = bump();
  const Vec2 y1(0.35, -0.2), y2(-0.1, 0.45);
  double prev = 1;
  for (int nr : {16, 64}) {
    Fixture f(DomainSpec::unit_disk(), a, nr);
    GreenTable t(*f.op);
    const double d = check_symmetry(t, t.add(y1, SourceLocation::Interior), t.add(y2, SourceLocation::Interior));
    EXPECT_LT(d, 1e-2);
    EXPECT_LT(d, prev);
    prev = d;
  }
}

TEST(Green, InteriorSourceTooCloseToBoundary) {
  Fixture f(DomainSpec::unit_disk(), AnisotropyField::constant(1.0), 32);
  EXPECT_THROW(solve_green(*f.op, Vec2(0.999, 0), SourceLocation::Interior), std::invalid_argument);
  EXPECT_THROW(solve_green(*f.op, Vec2(1.5, 0), SourceLocation::Interior), std::invalid_argument);
}

TEST(Green, BoundarySourceSnapsToNode) {
  Fixture f(DomainSpec::unit_disk(), AnisotropyField::constant(1.0), 32);
  const GreenField g = solve_green(*f.op, Vec2(0.98, 0.05), SourceLocation::Boundary);
  ASSERT_GE(g.snapped_node, 0);
  EXPECT_TRUE(f.mesh.is_boundary(g.snapped_node));
  EXPECT_EQ(g.y, f.mesh.nodes[g.snapped_node]);
  EXPECT_DOUBLE_EQ(g.c(), 1 / kPi);
}

TEST(Green, CacheRoundTrip) {
  const auto a = bump();
  Fixture f(DomainSpec::unit_disk(), a, 32);
  GreenTable t(*f.op);
  t.add(Vec2(0.1, 0.1), SourceLocation::Interior);
  t.add(Vec2(0, 1), SourceLocation::Boundary);
  const auto path = (std::filesystem::temp_directory_path() / "spikekit_green_cache_test.bin").string();
  save_green_cache(path, t);

  GreenTable u(*f.op);
  EXPECT_EQ(load_green_cache(path, u), 2);
  ASSERT_EQ(u.size(), 2u);
  EXPECT_EQ(u.robin(0), t.robin(0));
  EXPECT_EQ(u.source(1).H, t.source(1).H);

  Fixture other(DomainSpec::unit_disk(), AnisotropyField::gaussian(0.4, 0.4, Vec2::Zero()), 32);
  GreenTable v(*other.op);
  EXPECT_EQ(load_green_cache(path, v), 0);
  EXPECT_NE(operator_fingerprint(f.mesh, a), operator_fingerprint(other.mesh, other.op->coefficient()));
  std::filesystem::remove(path);
}

TEST(Anisotropy, ValidationRules) {
  const Mesh m = build_mesh(DomainSpec::unit_disk(), 16, 32);
  EXPECT_NO_THROW(bump().validate(m, 0.05));
  EXPECT_NO_THROW(AnisotropyField::constant(1.0).validate(m, 0.05));
  // q is a minimum
  EXPECT_THROW(AnisotropyField::gaussian(-0.5, 0.4, Vec2::Zero()).validate(m, 0.5), std::invalid_argument);
  // plateau outside the support still lies below a(q)
  EXPECT_NO_THROW(AnisotropyField::cosine(0.5, 0.1, Vec2::Zero()).validate(m, 0.9));
  // not positive
  auto neg = AnisotropyField::gaussian(-2.0, 0.4, Vec2::Zero());
  neg.value = 1.0;
  EXPECT_THROW(neg.validate(m, 0.05), std::invalid_argument);
  // boundary q: the closed forms are radial about q, so ∂_n a(q) = 0
  EXPECT_NO_THROW(AnisotropyField::gaussian(0.5, 0.4, Vec2(1, 0), true).validate(m, 0.3));
}

TEST(Anisotropy, GradientMatchesFiniteDifferences) {
  for (const auto& a : {bump(), AnisotropyField::gaussian(0.7, 0.3, Vec2(0.1, 0), false, 3.0),
                        AnisotropyField::cosine(0.5, 0.6, Vec2::Zero())}) {
    const Vec2 x(0.17, -0.09);
    const double h = 1e-6;
    const Vec2 fd((a(x + Vec2(h, 0)) - a(x - Vec2(h, 0))) / (2 * h), (a(x + Vec2(0, h)) - a(x - Vec2(0, h))) / (2 * h));
    EXPECT_LT((fd - a.gradient(x)).norm(), 1e-7);
  }
}
