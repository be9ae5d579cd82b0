#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tgfem/assembly.hpp"
#include "tgfem/errors.hpp"
#include "tgfem/fem_function.hpp"
#include "tgfem/sparse.hpp"

namespace tgfem {

enum class Preconditioner { none, jacobi };

struct SolveReport {
  std::size_t iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
  std::size_t linear_iters_total = 0;
};

struct PcgOptions {
  double tol = 1e-10; // relative to ||rhs||_2
  std::size_t max_iters = 10000;
  Preconditioner preconditioner = Preconditioner::jacobi;
  /// Called with (k, x_k) after every update, k = 1, 2, ...
  std::function<void(std::size_t, std::span<const double>)> on_iterate;
};

namespace detail {

[[nodiscard]] inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * b[i];
  }
  return s;
}

[[nodiscard]] inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

[[nodiscard]] inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) {
    m = std::max(m, std::abs(v));
  }
  return m;
}

} // namespace detail

/// Preconditioned conjugate gradients for SPD `a`, starting from `x0` (or 0).
/// Stops when ||rhs - A x||_2 <= tol ||rhs||_2; throws NoConvergence carrying
/// the iterate with the smallest residual otherwise.
[[nodiscard]] inline std::pair<std::vector<double>, SolveReport>
pcg_solve(const SparseMatrix &a, std::span<const double> rhs, const PcgOptions &opts = {},
          std::span<const double> x0 = {}) {
  const std::size_t n = a.size();
  std::vector<double> x(n, 0.0);
  if (!x0.empty()) {
    std::copy(x0.begin(), x0.end(), x.begin());
  }
  SolveReport report;
  std::vector<double> r(n);
  a.multiply(x, r);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = rhs[i] - r[i];
  }
  const double rhs_norm = detail::norm2(rhs);
  const double target = opts.tol * rhs_norm;
  double res = detail::norm2(r);
  report.residual_history.push_back(res);
  if (res <= target || rhs_norm == 0.0) {
    if (rhs_norm == 0.0) {
      std::fill(x.begin(), x.end(), 0.0);
      report.residual_history.back() = 0.0;
    }
    report.converged = true;
    return {std::move(x), std::move(report)};
  }

  std::vector<double> inv_diag(n, 1.0);
  if (opts.preconditioner == Preconditioner::jacobi) {
    const auto d = a.diagonal();
    for (std::size_t i = 0; i < n; ++i) {
      if (!(d[i] > 0.0)) {
        throw std::invalid_argument("Jacobi preconditioner needs a positive diagonal");
      }
      inv_diag[i] = 1.0 / d[i];
    }
  }
  std::vector<double> z(n);
  std::vector<double> p(n);
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = inv_diag[i] * r[i];
  }
  p = z;
  double rho = detail::dot(r, z);
  std::vector<double> best = x;
  double best_res = res;

  for (std::size_t k = 1; k <= opts.max_iters; ++k) {
    a.multiply(p, q);
    const double alpha = rho / detail::dot(p, q);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    res = detail::norm2(r);
    report.iterations = k;
    report.residual_history.push_back(res);
    if (opts.on_iterate) {
      opts.on_iterate(k, x);
    }
    if (res <= target) {
      report.converged = true;
      report.linear_iters_total = k;
      return {std::move(x), std::move(report)};
    }
    if (res < best_res) {
      best_res = res;
      best = x;
    }
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = inv_diag[i] * r[i];
    }
    const double rho_next = detail::dot(r, z);
    const double beta = rho_next / rho;
    rho = rho_next;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = z[i] + beta * p[i];
    }
  }
  throw NoConvergence("PCG did not reach relative residual " + std::to_string(opts.tol) + " in " +
                          std::to_string(opts.max_iters) + " iterations",
                      std::move(best));
}

/// Gaussian elimination with partial pivoting. Intended for small systems
/// (test oracles); refuses n > max_n.
[[nodiscard]] inline std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b,
                                                     std::size_t max_n = 200) {
  const std::size_t n = a.size();
  if (n > max_n) {
    throw std::invalid_argument("dense solve limited to " + std::to_string(max_n) + " unknowns");
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) {
        piv = r;
      }
    }
    if (a[piv][c] == 0.0) {
      throw std::invalid_argument("singular matrix in dense solve");
    }
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      if (f == 0.0) {
        continue;
      }
      for (std::size_t k = c; k < n; ++k) {
        a[r][k] -= f * a[c][k];
      }
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) {
      s -= a[i][k] * x[k];
    }
    x[i] = s / a[i][i];
  }
  return x;
}

struct NewtonOptions {
  double abs_tol = 1e-10; // on the residual sup-norm
  double rel_tol = 1e-12; // relative to the initial residual sup-norm
  std::size_t max_iters = 50;
  double min_step = 1.0 / 1024.0;
  Preconditioner preconditioner = Preconditioner::jacobi;
  std::ostream *log = nullptr; // receives `iter k resid r lin_iters m` lines
  /// Called with (k, u_k) for k = 0 (initial) and after every accepted step.
  std::function<void(std::size_t, const FemFunction &)> on_iterate;
};

/// Inexact PCG tolerance for a Newton step at nonlinear residual `resid`.
[[nodiscard]] inline double newton_forcing_term(double resid) {
  return std::clamp(1e-2 * resid, 1e-12, 1e-2);
}

/// Damped Newton iteration for the discrete semilinear system.
///
/// Each step solves (A + M_{b'(u)}) du = -F(u) with homogeneous Dirichlet
/// rows, then halves the step until the residual sup-norm does not increase.
[[nodiscard]] inline std::pair<FemFunction, SolveReport> newton_solve(const SemilinearSystem &sys, FemFunction initial,
                                                                      const NewtonOptions &opts = {}) {
  if (!(opts.abs_tol > 0.0) || !(opts.rel_tol > 0.0) || opts.max_iters < 1) {
    throw std::invalid_argument("Newton tolerances must be positive and max_iters >= 1");
  }
  const Mesh &mesh = *sys.mesh();
  FemFunction u = sys.with_boundary_values(std::move(initial));
  auto r = sys.residual(u);
  double rn = detail::norm_inf(r);
  const double target = std::max(opts.abs_tol, opts.rel_tol * rn);
  SolveReport report;
  report.residual_history.push_back(rn);
  if (opts.on_iterate) {
    opts.on_iterate(0, u);
  }
  const std::vector<double> zeros(mesh.num_vertices(), 0.0);

  for (std::size_t k = 1;; ++k) {
    if (rn <= target) {
      report.converged = true;
      return {std::move(u), std::move(report)};
    }
    if (k > opts.max_iters) {
      throw NoConvergence("Newton did not converge in " + std::to_string(opts.max_iters) +
                              " iterations (residual " + std::to_string(rn) + ")",
                          std::move(u.coeffs));
    }
    std::vector<double> rhs(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      rhs[i] = -r[i];
    }
    auto [jac, b] = apply_dirichlet(sys.jacobian(u), std::move(rhs), mesh.boundary, zeros);
    PcgOptions lin;
    // Never stop the linear solve short of what an exact linear model would need
    // to terminate; the sup-norm residual is bounded by the 2-norm one.
    const double bn = detail::norm2(b);
    lin.tol = newton_forcing_term(rn);
    if (bn > 0.0) {
      lin.tol = std::max(std::min(lin.tol, 0.5 * target / bn), 1e-15);
    }
    lin.max_iters = std::max<std::size_t>(1000, 4 * mesh.num_vertices());
    lin.preconditioner = opts.preconditioner;
    auto [delta, lin_report] = pcg_solve(jac, b, lin);
    report.linear_iters_total += lin_report.iterations;

    double step = 1.0;
    for (;;) {
      FemFunction trial = u;
      for (std::size_t i = 0; i < trial.size(); ++i) {
        trial[i] += step * delta[i];
      }
      auto tr = sys.residual(trial);
      const double tn = detail::norm_inf(tr);
      if (tn <= rn) {
        u = std::move(trial);
        r = std::move(tr);
        rn = tn;
        break;
      }
      step *= 0.5;
      if (step < opts.min_step) {
        throw LineSearchStall("line search step fell below " + std::to_string(opts.min_step) + " at Newton iteration " +
                              std::to_string(k) + " (residual " + std::to_string(rn) + ")");
      }
    }
    report.iterations = k;
    report.residual_history.push_back(rn);
    if (opts.log) {
      *opts.log << "iter " << k << " resid " << rn << " lin_iters " << lin_report.iterations << '\n';
    }
    if (opts.on_iterate) {
      opts.on_iterate(k, u);
    }
  }
}

[[nodiscard]] inline std::pair<FemFunction, SolveReport> newton_solve(const MeshPtr &mesh, const Problem &problem,
                                                                      FemFunction initial,
                                                                      const NewtonOptions &opts = {},
                                                                      const QuadratureRule &quad = triangle_rule()) {
  const SemilinearSystem sys(mesh, problem, quad);
  return newton_solve(sys, std::move(initial), opts);
}

} // namespace tgfem
