#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "tgfem/problems.hpp"

using namespace tgfem;

namespace {

Problem bounded_problem(Nonlinearity b, double fmin, double fmax, double gmin = 0.0, double gmax = 0.0) {
  Problem p;
  p.nonlinearity = std::move(b);
  p.source_min = fmin;
  p.source_max = fmax;
  p.dirichlet_min = gmin;
  p.dirichlet_max = gmax;
  return p;
}

void expect_derivatives_match(const Nonlinearity &b, const std::vector<Site> &sites) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> xi(-3.0, 3.0);
  std::uniform_int_distribution<std::size_t> pick(0, sites.size() - 1);
  for (int k = 0; k < 1000; ++k) {
    const Site s = sites[pick(rng)];
    const double x = xi(rng);
    const double eps = 1e-5 * std::max(1.0, std::abs(x));
    const double fd1 = (b.eval(s, x + eps) - b.eval(s, x - eps)) / (2 * eps);
    const double fd2 = (b.d1(s, x + eps) - b.d1(s, x - eps)) / (2 * eps);
    const double d1 = b.d1(s, x);
    const double d2 = b.d2(s, x);
    EXPECT_LE(std::abs(fd1 - d1), 1e-6 * std::max(1.0, std::abs(d1))) << "x=" << x;
    EXPECT_LE(std::abs(fd2 - d2), 1e-6 * std::max(1.0, std::abs(d2))) << "x=" << x;
  }
}

const std::vector<Site> kSites{{{0.0, 0.0}, 1}, {{0.3, -0.2}, 1}, {{0.9, 0.9}, 2}, {{-0.7, 0.1}, 2}};

} // namespace

TEST(Barriers, CubicWithSourceEight) {
  const auto b = compute_barriers(bounded_problem(odd_power_nonlinearity(3), 8.0, 8.0));
  EXPECT_NEAR(b.lower, 0.0, 1e-14);
  EXPECT_NEAR(b.upper, 2.0, 1e-12);
}

TEST(Barriers, SinhWithoutData) {
  const auto b = compute_barriers(builtin_problem("sinh_pbe"));
  EXPECT_EQ(b.lower, 0.0);
  EXPECT_EQ(b.upper, 0.0);
}

TEST(Barriers, PowerElevenWithBoundedSource) {
  const auto b = compute_barriers(bounded_problem(odd_power_nonlinearity(11), -1000.0, 1000.0));
  const double r = std::pow(1000.0, 1.0 / 11.0);
  EXPECT_NEAR(b.upper, r, 1e-12);
  EXPECT_NEAR(b.lower, -r, 1e-12);
  EXPECT_NEAR(b.upper, 1.8738, 1e-4);
}

TEST(Barriers, BoundaryDataWidensTheBox) {
  const auto b = compute_barriers(bounded_problem(odd_power_nonlinearity(3), 8.0, 8.0, -1.0, 5.0));
  EXPECT_EQ(b.lower, -1.0);
  EXPECT_EQ(b.upper, 5.0);
}

TEST(Barriers, ZeroReactionWithPositiveSourceHasNone) {
  EXPECT_THROW((void)compute_barriers(builtin_problem("zero_reaction", {{"source", 1.0}})), NoFiniteBarrier);
}

TEST(Barriers, PointSourceHasNone) {
  EXPECT_THROW((void)compute_barriers(builtin_problem("power11")), NoFiniteBarrier);
}

TEST(Barriers, FoldedSignsAtBarriers) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  for (double f : {0.5, 3.0, 50.0}) {
    const auto p = bounded_problem(odd_power_nonlinearity(5, 2.0), -f, f);
    const auto bar = compute_barriers(p);
    for (int k = 0; k < 100; ++k) {
      const Site s{{coord(rng), coord(rng)}, k % 2 ? 1 : 2};
      EXPECT_GE(p.nonlinearity.eval(s, bar.upper) - f, -1e-12);
      EXPECT_LE(p.nonlinearity.eval(s, bar.lower) + f, 1e-12);
    }
  }
}

TEST(Nonlinearity, SignProperty) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> xi(0.0, 4.0);
  for (const auto &name : builtin_problem_names()) {
    const auto p = builtin_problem(name);
    const auto &b = p.nonlinearity;
    ASSERT_LE(b.alpha, b.beta);
    for (int k = 0; k < 200; ++k) {
      const Site s = kSites[static_cast<std::size_t>(k) % kSites.size()];
      EXPECT_GE(b.eval(s, b.beta + xi(rng)), 0.0) << name;
      EXPECT_LE(b.eval(s, b.alpha - xi(rng)), 0.0) << name;
    }
  }
}

TEST(Nonlinearity, DerivativesMatchFiniteDifferences) {
  for (const auto &name : builtin_problem_names()) {
    SCOPED_TRACE(name);
    expect_derivatives_match(builtin_problem(name).nonlinearity, kSites);
  }
  expect_derivatives_match(sinh_nonlinearity(3.0, 0.5), kSites);
  expect_derivatives_match(odd_power_nonlinearity(7, 0.25), kSites);
}

TEST(Nonlinearity, MonotoneInsideBarriers) {
  const auto p = bounded_problem(odd_power_nonlinearity(3), 8.0, 8.0);
  const auto bar = compute_barriers(p);
  for (int k = 0; k <= 100; ++k) {
    const double x = bar.lower + (bar.upper - bar.lower) * k / 100.0;
    EXPECT_GE(p.nonlinearity.d1(kSites[0], x), 0.0);
  }
}

TEST(BuiltinProblem, PowerEleven) {
  const auto p = builtin_problem("power11");
  EXPECT_EQ(p.diffusion[0], 1000.0);
  EXPECT_EQ(p.diffusion[1], 1.0);
  ASSERT_TRUE(p.point_source.has_value());
  EXPECT_EQ(p.point_source->magnitude, 1000.0);
  EXPECT_EQ(p.point_source->location, (Point{0.0, 0.0}));
  EXPECT_DOUBLE_EQ(p.nonlinearity.eval(kSites[2], 2.0), 2048.0);
  EXPECT_EQ(p.max_diffusion() / p.min_diffusion(), 1000.0);
}

TEST(BuiltinProblem, SinhIsMonotone) {
  const auto p = builtin_problem("sinh_pbe", {{"kappa2", 1.0}});
  for (double x = -5.0; x <= 5.0; x += 0.25) {
    EXPECT_GE(p.nonlinearity.d1({{0.9, 0.9}, 2}, x), 1.0);
    EXPECT_EQ(p.nonlinearity.eval({{0.0, 0.0}, 1}, x), 0.0);
  }
}

TEST(BuiltinProblem, LinearReaction) {
  const auto p = builtin_problem("linear_reaction", {{"c", 0.0}});
  EXPECT_EQ(p.nonlinearity.eval(kSites[0], 3.0), 0.0);
  const auto q = builtin_problem("linear_reaction", {{"c", 10.0}});
  EXPECT_EQ(q.nonlinearity.eval(kSites[0], 3.0), 30.0);
  EXPECT_EQ(q.nonlinearity.d1(kSites[0], -7.0), 10.0);
  EXPECT_THROW((void)builtin_problem("linear_reaction", {{"c", -1.0}}), UnknownProblem);
}

TEST(BuiltinProblem, UnknownNamesAndParameters) {
  EXPECT_THROW((void)builtin_problem("power12"), UnknownProblem);
  EXPECT_THROW((void)builtin_problem("power11", {{"kappa2", 1.0}}), UnknownProblem);
  EXPECT_THROW((void)builtin_problem("cubic", {{"d1", -1.0}}), UnknownProblem);
}

TEST(Manufactured, EqualDiffusionHasNoFluxJump) {
  const auto [p, ms] = manufactured_interface_problem(1.0, 1.0);
  EXPECT_LT(ms.continuity_residual, 1e-15);
  EXPECT_LT(ms.flux_residual, 1e-15);
  EXPECT_EQ(p.diffusion[0], p.diffusion[1]);
}

TEST(Manufactured, InterfaceConditionsAtSampledPoints) {
  for (const auto d : {std::array{1000.0, 1.0}, std::array{1.0, 1000.0}, std::array{2.0, 80.0}}) {
    const auto [p, ms] = manufactured_interface_problem(d[0], d[1]);
    EXPECT_LT(ms.flux_residual, 1e-12);
    for (int k = 0; k < 100; ++k) {
      const double y = -1.0 + 2.0 * (k + 0.5) / 100.0;
      const Site left{{0.0, y}, 1};
      const Site right{{0.0, y}, 2};
      EXPECT_NEAR(ms.exact(left), ms.exact(right), 1e-12);
      EXPECT_NEAR(d[0] * ms.exact_grad(left).x, d[1] * ms.exact_grad(right).x, 1e-12);
      EXPECT_NEAR(ms.exact_grad(left).y, ms.exact_grad(right).y, 1e-12);
    }
  }
}

TEST(Manufactured, VanishesOnTheBoundary) {
  const auto [p, ms] = manufactured_interface_problem(1000.0, 1.0);
  for (int k = 0; k <= 20; ++k) {
    const double t = -1.0 + k / 10.0;
    const int r = t < 0 ? 1 : 2;
    EXPECT_NEAR(ms.exact({{t, -1.0}, r}), 0.0, 1e-15);
    EXPECT_NEAR(ms.exact({{t, 1.0}, r}), 0.0, 1e-15);
    EXPECT_NEAR(ms.exact({{-1.0, t}, 1}), 0.0, 1e-15);
    EXPECT_NEAR(ms.exact({{1.0, t}, 2}), 0.0, 1e-15);
  }
}

TEST(Manufactured, SourceMatchesFiniteDifferences) {
  for (const auto d : {std::array{1000.0, 1.0}, std::array{1.0, 1.0}}) {
    const auto [p, ms] = manufactured_interface_problem(d[0], d[1]);
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    for (int k = 0; k < 50; ++k) {
      const double x = u(rng);
      const double y = u(rng);
      if (std::abs(x) < 0.05) {
        continue;
      }
      const int r = x < 0 ? 1 : 2;
      const double h = 1e-4;
      auto U = [&](double a, double b) { return ms.exact({{a, b}, r}); };
      const double lap = (U(x + h, y) + U(x - h, y) + U(x, y + h) + U(x, y - h) - 4 * U(x, y)) / (h * h);
      const double expected = -d[r - 1] * lap + p.nonlinearity.eval({{x, y}, r}, U(x, y));
      const double f = ms.source({{x, y}, r});
      EXPECT_NEAR(f, expected, 1e-5 * std::max(1.0, std::abs(f))) << x << "," << y;
    }
  }
}

TEST(Manufactured, GradientMatchesFiniteDifferences) {
  const auto [p, ms] = manufactured_interface_problem(1000.0, 1.0);
  const Site s{{-0.4, 0.3}, 1};
  const double h = 1e-6;
  const double gx = (ms.exact({{s.x.x + h, s.x.y}, 1}) - ms.exact({{s.x.x - h, s.x.y}, 1})) / (2 * h);
  const double gy = (ms.exact({{s.x.x, s.x.y + h}, 1}) - ms.exact({{s.x.x, s.x.y - h}, 1})) / (2 * h);
  EXPECT_NEAR(ms.exact_grad(s).x, gx, 1e-8);
  EXPECT_NEAR(ms.exact_grad(s).y, gy, 1e-8);
}

TEST(Manufactured, RejectsNonpositiveDiffusion) {
  EXPECT_THROW((void)manufactured_interface_problem(0.0, 1.0), UnknownProblem);
}
