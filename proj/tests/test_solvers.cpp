#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "tgfem/analysis.hpp"
#include "tgfem/solvers.hpp"

using namespace tgfem;

namespace {

const Rect kDomain{-1.0, 1.0, -1.0, 1.0};
const Rect kBox{-0.5, 0.5, -0.5, 0.5};

MeshPtr mesh_n(int n) { return generate_interface_mesh(n, kDomain, kBox); }

double sup_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

std::pair<SparseMatrix, std::vector<double>> constrained_laplacian(const MeshPtr &m, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> rhs(m->num_vertices());
  for (auto &v : rhs) {
    v = u(rng);
  }
  return apply_dirichlet(assemble_stiffness(*m, {1000.0, 1.0}), rhs, *m, [](const Point &) { return 0.0; });
}

} // namespace

TEST(Pcg, IdentityInOneIteration) {
  const auto a = SparseMatrix::from_dense({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, true);
  const std::vector<double> rhs{1.0, -2.0, 3.5};
  const auto [x, rep] = pcg_solve(a, rhs);
  EXPECT_EQ(rep.iterations, 1u);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(x, rhs);
}

TEST(Pcg, TwoByTwo) {
  const auto a = SparseMatrix::from_dense({{2, 1}, {1, 2}}, true);
  const std::vector<double> rhs{1.0, 1.0};
  for (auto pre : {Preconditioner::none, Preconditioner::jacobi}) {
    const auto [x, rep] = pcg_solve(a, rhs, {.tol = 1e-14, .preconditioner = pre});
    EXPECT_NEAR(x[0], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(x[1], 1.0 / 3.0, 1e-15);
  }
}

TEST(Pcg, ZeroRightHandSide) {
  const auto a = SparseMatrix::from_dense({{2, 1}, {1, 2}}, true);
  const auto [x, rep] = pcg_solve(a, std::vector<double>{0.0, 0.0}, {}, std::vector<double>{5.0, 5.0});
  EXPECT_EQ(x[0], 0.0);
  EXPECT_EQ(rep.iterations, 0u);
}

TEST(Pcg, LaplacianWithinDofIterations) {
  const auto m = mesh_n(16);
  auto [a, b] = constrained_laplacian(m, 1);
  const auto [x, rep] = pcg_solve(a, b, {.tol = 1e-10, .max_iters = m->num_free_vertices()});
  ASSERT_TRUE(rep.converged);
  EXPECT_LE(rep.iterations, m->num_free_vertices());
  const auto ax = a * std::span<const double>(x);
  double rn = 0.0;
  double bn = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    rn += (b[i] - ax[i]) * (b[i] - ax[i]);
    bn += b[i] * b[i];
  }
  EXPECT_LE(std::sqrt(rn), 1e-10 * std::sqrt(bn));
}

TEST(Pcg, MatchesDenseOracleAndAnormDecreases) {
  for (int n : {4, 8, 12}) {
    const auto m = mesh_n(n);
    ASSERT_LE(m->num_vertices(), 200u);
    auto [a, b] = constrained_laplacian(m, static_cast<unsigned>(n));
    const auto xs = solve_dense(a.to_dense(), b);
    std::vector<double> anorm;
    PcgOptions opts{.tol = 1e-14};
    opts.on_iterate = [&](std::size_t, std::span<const double> xk) {
      std::vector<double> e(xk.size());
      for (std::size_t i = 0; i < e.size(); ++i) {
        e[i] = xs[i] - xk[i];
      }
      const auto ae = a * std::span<const double>(e);
      anorm.push_back(std::sqrt(detail::dot(e, ae)));
    };
    const auto [x, rep] = pcg_solve(a, b, opts);
    EXPECT_LE(sup_diff(x, xs), 1e-8);
    for (std::size_t k = 1; k < anorm.size(); ++k) {
      EXPECT_LE(anorm[k], anorm[k - 1] * (1 + 1e-10) + 1e-14) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Pcg, NoConvergenceCarriesBestIterate) {
  const auto m = mesh_n(16);
  auto [a, b] = constrained_laplacian(m, 2);
  try {
    (void)pcg_solve(a, b, {.tol = 1e-14, .max_iters = 3});
    FAIL() << "expected NoConvergence";
  } catch (const NoConvergence &e) {
    EXPECT_EQ(e.best_iterate().size(), b.size());
  }
}

TEST(DenseSolve, RefusesLargeSystems) {
  std::vector<std::vector<double>> a(201, std::vector<double>(201, 0.0));
  EXPECT_THROW((void)solve_dense(a, std::vector<double>(201, 0.0)), std::invalid_argument);
}

TEST(ForcingTerm, ClampedRange) {
  EXPECT_EQ(newton_forcing_term(1e3), 1e-2);
  EXPECT_DOUBLE_EQ(newton_forcing_term(1e-3), 1e-5);
  EXPECT_EQ(newton_forcing_term(1e-20), 1e-12);
}

TEST(Newton, AffineProblemsConvergeInOneStep) {
  const auto m = mesh_n(8);
  for (double c : {0.0, 1.0, 10.0}) {
    const auto p = builtin_problem("linear_reaction", {{"c", c}, {"source", 3.0}});
    const auto [u, rep] = newton_solve(m, p, FemFunction(m), {.abs_tol = 1e-10});
    EXPECT_EQ(rep.iterations, 1u) << c;
    EXPECT_TRUE(rep.converged);
  }
}

TEST(Newton, PowerElevenOnSixteen) {
  const auto m = mesh_n(16);
  const auto p = builtin_problem("power11");
  std::ostringstream log;
  const auto [u, rep] = newton_solve(m, p, FemFunction(m), {.abs_tol = 1e-10, .log = &log});
  ASSERT_TRUE(rep.converged);
  EXPECT_LT(rep.residual_history.back(), 1e-10);
  for (std::size_t k = 1; k < rep.residual_history.size(); ++k) {
    EXPECT_LE(rep.residual_history[k], rep.residual_history[k - 1]);
  }
  for (std::size_t i = 0; i < m->num_vertices(); ++i) {
    if (m->is_boundary(i)) {
      EXPECT_EQ(u[i], 0.0);
    }
  }
  EXPECT_NE(log.str().find("iter 1 resid "), std::string::npos);
  EXPECT_NE(log.str().find(" lin_iters "), std::string::npos);
  const auto r = assemble_semilinear_residual(u, p, triangle_rule());
  EXPECT_LT(detail::norm_inf(r), 1e-10);
}

TEST(Newton, QuadraticConvergenceOnSinh) {
  const auto m = mesh_n(16);
  const auto p = builtin_problem("sinh_pbe", {{"boundary", 6.0}, {"kappa2", 50.0}});
  std::vector<FemFunction> iterates;
  NewtonOptions opts{.abs_tol = 1e-13};
  opts.on_iterate = [&](std::size_t, const FemFunction &u) { iterates.push_back(u); };
  const auto [us, rep] = newton_solve(m, p, FemFunction(m), opts);
  ASSERT_GE(iterates.size(), 5u);
  std::vector<double> err;
  for (const auto &u : iterates) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      s += (u[i] - us[i]) * (u[i] - us[i]);
    }
    err.push_back(std::sqrt(s));
  }
  // Last three steps with a meaningful error (above round-off).
  std::vector<double> ratios;
  for (std::size_t k = 0; k + 1 < err.size(); ++k) {
    if (err[k + 1] > 1e-12 && err[k] > 0.0) {
      ratios.push_back(err[k + 1] / (err[k] * err[k]));
    }
  }
  ASSERT_GE(ratios.size(), 2u);
  const std::size_t first = ratios.size() >= 3 ? ratios.size() - 3 : 0;
  for (std::size_t k = first; k < ratios.size(); ++k) {
    EXPECT_LT(ratios[k], 10.0) << k;
  }
}

TEST(Newton, IndependentOfInitialGuessInsideBarrierBox) {
  const auto m = mesh_n(16);
  const auto p = builtin_problem("sinh_pbe", {{"boundary", 2.0}});
  const auto [u0, r0] = newton_solve(m, p, FemFunction(m), {.abs_tol = 1e-12});
  for (double start : {0.5, 1.0, 2.0}) {
    const auto [u1, r1] = newton_solve(m, p, FemFunction(m, start), {.abs_tol = 1e-12});
    EXPECT_LE(sup_diff(u0.coeffs, u1.coeffs), 1e-8) << start;
  }
}

TEST(Newton, SolutionRespectsBarriers) {
  const auto m = refine_uniform(mesh_n(8));
  const auto p = builtin_problem("cubic");
  const auto [u, rep] = newton_solve(m, p, FemFunction(m));
  EXPECT_TRUE(linf_check(u, compute_barriers(p)).passes);
}

TEST(Newton, RejectsBadOptions) {
  const auto m = mesh_n(4);
  const auto p = builtin_problem("cubic");
  EXPECT_THROW((void)newton_solve(m, p, FemFunction(m), {.abs_tol = 0.0}), std::invalid_argument);
  EXPECT_THROW((void)newton_solve(m, p, FemFunction(m), {.max_iters = 0}), std::invalid_argument);
}

TEST(Newton, IterationLimit) {
  const auto m = mesh_n(8);
  const auto p = builtin_problem("power11");
  EXPECT_THROW((void)newton_solve(m, p, FemFunction(m), {.max_iters = 1}), NoConvergence);
}
