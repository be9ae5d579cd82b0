#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tgfem/errors.hpp"
#include "tgfem/geometry.hpp"

namespace tgfem {

/// A point together with the region tag of the element it was sampled in.
/// Coefficients that jump across the interface are resolved by the tag.
struct Site {
  Point x;
  int region = 2;
};

using ScalarField = std::function<double(const Site &)>;
using ReactionFn = std::function<double(const Site &, double)>;
using BoundaryFn = std::function<double(const Point &)>;

enum class GrowthClass { subcritical, critical, supercritical };

/// Zeroth-order term b(x, xi) with its first two xi-derivatives and the
/// sign-change constants alpha <= beta: b >= 0 for xi >= beta, b <= 0 for xi <= alpha.
struct Nonlinearity {
  ReactionFn eval;
  ReactionFn d1;
  ReactionFn d2;
  double alpha = 0.0;
  double beta = 0.0;
  GrowthClass growth_class = GrowthClass::subcritical; // metadata only
};

struct PointSource {
  Point location;
  double magnitude = 0.0;
};

/// -div(D grad u) + b(x, u) = f in Omega, u = g on the boundary,
/// [u] = 0 and [D du/dn] = g_interface on the interface.
struct Problem {
  std::string name;
  std::array<double, 2> diffusion{1.0, 1.0}; // D_1 (region 1), D_2 (region 2)
  Nonlinearity nonlinearity;

  ScalarField volume_source; // empty means f = 0
  double source_min = 0.0;   // caller-supplied bounds on f
  double source_max = 0.0;
  std::optional<PointSource> point_source;
  BoundaryFn interface_flux; // empty means homogeneous flux jump

  BoundaryFn dirichlet = [](const Point &) { return 0.0; };
  double dirichlet_min = 0.0;
  double dirichlet_max = 0.0;

  /// Where the nonlinearity is sampled when computing barriers.
  std::vector<Site> barrier_sites{{{0.0, 0.0}, 1}, {{0.0, 0.0}, 2}};

  [[nodiscard]] double diffusion_of(int region) const { return diffusion[region == 1 ? 0 : 1]; }
  [[nodiscard]] double min_diffusion() const { return std::min(diffusion[0], diffusion[1]); }
  [[nodiscard]] double max_diffusion() const { return std::max(diffusion[0], diffusion[1]); }
};

struct Barriers {
  double lower = 0.0;
  double upper = 0.0;
};

namespace detail {

/// Smallest xi >= start with f(xi) >= target, assuming f is nondecreasing
/// from `start` on. `direction` = -1 mirrors the search to the left.
template <typename F>
double threshold_search(F &&f, double start, double target, int direction, const char *side) {
  auto ok = [&](double xi) { return direction > 0 ? f(xi) >= target : f(xi) <= target; };
  if (ok(start)) {
    return start;
  }
  double good = start;
  double bad = start;
  double step = std::max(1.0, std::abs(start));
  for (;;) {
    good = start + direction * step;
    if (ok(good)) {
      break;
    }
    bad = good;
    step *= 2.0;
    if (step > 1e12) {
      throw NoFiniteBarrier(std::string("folded nonlinearity never changes sign on the ") + side + " side");
    }
  }
  for (int it = 0; it < 200 && std::abs(good - bad) > 4.0 * std::numeric_limits<double>::epsilon() * std::abs(good);
       ++it) {
    const double mid = 0.5 * (good + bad);
    (ok(mid) ? good : bad) = mid;
  }
  return good;
}

} // namespace detail

/// L-infinity barriers: upper = max(beta~, sup g), lower = min(alpha~, inf g),
/// where alpha~, beta~ are sign-change constants of b(x, xi) - f(x).
///
/// The search assumes b is monotone outside [alpha, beta] at the sampled
/// sites. Point sources and interface flux data are not bounded data and
/// raise NoFiniteBarrier.
[[nodiscard]] inline Barriers compute_barriers(const Problem &problem) {
  if (problem.point_source && problem.point_source->magnitude != 0.0) {
    throw NoFiniteBarrier("point sources are not bounded; no L-infinity barrier is available");
  }
  if (problem.interface_flux) {
    throw NoFiniteBarrier("interface flux data is not covered by the barrier construction");
  }
  const auto &b = problem.nonlinearity;
  if (b.alpha > b.beta) {
    throw NoFiniteBarrier("nonlinearity has alpha > beta");
  }
  const auto &sites = problem.barrier_sites;
  auto min_b = [&](double xi) {
    double v = std::numeric_limits<double>::infinity();
    for (const auto &s : sites) {
      v = std::min(v, b.eval(s, xi));
    }
    return v;
  };
  auto max_b = [&](double xi) {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto &s : sites) {
      v = std::max(v, b.eval(s, xi));
    }
    return v;
  };
  const double beta_folded =
      problem.source_max <= 0.0 ? b.beta : detail::threshold_search(min_b, b.beta, problem.source_max, +1, "upper");
  const double alpha_folded =
      problem.source_min >= 0.0 ? b.alpha : detail::threshold_search(max_b, b.alpha, problem.source_min, -1, "lower");
  return {std::min(alpha_folded, problem.dirichlet_min), std::max(beta_folded, problem.dirichlet_max)};
}

namespace detail {

[[nodiscard]] inline double ipow(double x, int n) {
  double r = 1.0;
  for (; n > 0; --n) {
    r *= x;
  }
  return r;
}

} // namespace detail

/// b(xi) = coefficient * xi^p for odd p >= 1.
[[nodiscard]] inline Nonlinearity odd_power_nonlinearity(int p, double coefficient = 1.0) {
  Nonlinearity n;
  n.eval = [p, coefficient](const Site &, double xi) { return coefficient * detail::ipow(xi, p); };
  n.d1 = [p, coefficient](const Site &, double xi) { return coefficient * p * detail::ipow(xi, p - 1); };
  n.d2 = [p, coefficient](const Site &, double xi) {
    return p >= 2 ? coefficient * p * (p - 1) * detail::ipow(xi, p - 2) : 0.0;
  };
  n.alpha = 0.0;
  n.beta = 0.0;
  n.growth_class = GrowthClass::subcritical; // any polynomial growth is subcritical in 2D
  return n;
}

/// b(x, xi) = kappa2(x) sinh(xi) with kappa2 = 0 in region 1.
[[nodiscard]] inline Nonlinearity sinh_nonlinearity(double kappa2_region2, double kappa2_region1 = 0.0) {
  auto k2 = [=](const Site &s) { return s.region == 1 ? kappa2_region1 : kappa2_region2; };
  Nonlinearity n;
  n.eval = [k2](const Site &s, double xi) { return k2(s) * std::sinh(xi); };
  n.d1 = [k2](const Site &s, double xi) { return k2(s) * std::cosh(xi); };
  n.d2 = [k2](const Site &s, double xi) { return k2(s) * std::sinh(xi); };
  n.alpha = 0.0;
  n.beta = 0.0;
  n.growth_class = GrowthClass::supercritical;
  return n;
}

using Parameters = std::map<std::string, double>;

namespace detail {

class ParameterReader {
public:
  ParameterReader(std::string problem, const Parameters &p) : problem_(std::move(problem)), params_(p) {}

  double get(const std::string &key, double fallback) {
    used_.insert(key);
    auto it = params_.find(key);
    return it == params_.end() ? fallback : it->second;
  }

  void finish() const {
    for (const auto &[k, v] : params_) {
      if (!used_.count(k)) {
        throw UnknownProblem("problem '" + problem_ + "' has no parameter '" + k + "'");
      }
    }
  }

private:
  std::string problem_;
  const Parameters &params_;
  std::set<std::string> used_;
};

inline void set_constant_source(Problem &p, double f) {
  if (f != 0.0) {
    p.volume_source = [f](const Site &) { return f; };
  }
  p.source_min = f;
  p.source_max = f;
}

inline void set_constant_dirichlet(Problem &p, double g) {
  p.dirichlet = [g](const Point &) { return g; };
  p.dirichlet_min = g;
  p.dirichlet_max = g;
}

inline void check_diffusion(const Problem &p) {
  if (!(p.diffusion[0] > 0.0 && p.diffusion[1] > 0.0)) {
    throw UnknownProblem("diffusion coefficients must be positive");
  }
}

} // namespace detail

/// Names accepted by builtin_problem.
inline const std::vector<std::string> &builtin_problem_names() {
  static const std::vector<std::string> names{"power11", "sinh_pbe", "linear_reaction", "zero_reaction", "cubic"};
  return names;
}

/// Built-in problem instances on the (-1,1)^2 / (-1/2,1/2)^2 geometry.
///
/// - power11: D = (1000, 1), b = xi^11, load 1000 delta_0
/// - sinh_pbe: D = (2, 80), b = kappa2 sinh(xi) with kappa2 = 0 in region 1
/// - linear_reaction: b = c xi, constant source
/// - zero_reaction: b = 0
/// - cubic: b = xi^3, constant source (default f = 8)
[[nodiscard]] inline Problem builtin_problem(const std::string &name, const Parameters &params = {}) {
  detail::ParameterReader r(name, params);
  Problem p;
  p.name = name;
  if (name == "power11") {
    p.diffusion = {r.get("d1", 1000.0), r.get("d2", 1.0)};
    p.nonlinearity = odd_power_nonlinearity(11);
    p.point_source = PointSource{{r.get("load_x", 0.0), r.get("load_y", 0.0)}, r.get("load", 1000.0)};
  } else if (name == "sinh_pbe") {
    p.diffusion = {r.get("d1", 2.0), r.get("d2", 80.0)};
    p.nonlinearity = sinh_nonlinearity(r.get("kappa2", 1.0));
    const double flux = r.get("interface_flux", 0.0);
    if (flux != 0.0) {
      p.interface_flux = [flux](const Point &) { return flux; };
    }
    detail::set_constant_source(p, r.get("source", 0.0));
    detail::set_constant_dirichlet(p, r.get("boundary", 0.0));
  } else if (name == "linear_reaction") {
    const double c = r.get("c", 1.0);
    if (c < 0.0) {
      throw UnknownProblem("linear_reaction requires c >= 0");
    }
    p.diffusion = {r.get("d1", 1000.0), r.get("d2", 1.0)};
    p.nonlinearity = odd_power_nonlinearity(1, c);
    detail::set_constant_source(p, r.get("source", 1.0));
    detail::set_constant_dirichlet(p, r.get("boundary", 0.0));
  } else if (name == "zero_reaction") {
    p.diffusion = {r.get("d1", 1000.0), r.get("d2", 1.0)};
    p.nonlinearity = odd_power_nonlinearity(1, 0.0);
    detail::set_constant_source(p, r.get("source", 0.0));
    detail::set_constant_dirichlet(p, r.get("boundary", 0.0));
  } else if (name == "cubic") {
    p.diffusion = {r.get("d1", 1.0), r.get("d2", 1.0)};
    p.nonlinearity = odd_power_nonlinearity(3);
    detail::set_constant_source(p, r.get("source", 8.0));
    detail::set_constant_dirichlet(p, r.get("boundary", 0.0));
  } else {
    throw UnknownProblem("unknown problem '" + name + "'");
  }
  r.finish();
  detail::check_diffusion(p);
  return p;
}

/// Exact solution data for convergence studies.
struct ManufacturedSolution {
  std::function<double(const Site &)> exact;
  std::function<Point(const Site &)> exact_grad;
  ScalarField source;
  double regularity_s = 2.0;
  double continuity_residual = 0.0; // |w_1(0) - w_2(0)|
  double flux_residual = 0.0;       // |D_1 w_1'(0) - D_2 w_2'(0)|
};

/// Interface geometry of the manufactured problem: region 1 is x < 0.
[[nodiscard]] inline Rect manufactured_domain() { return {-1.0, 1.0, -1.0, 1.0}; }
[[nodiscard]] inline Rect manufactured_interface_box() { return {-1.0, 0.0, -1.0, 1.0}; }

/// u(x, y) = w(x) sin(pi y) on (-1,1)^2 with interface x = 0, where
/// w_1 = a (1 + x) + b_1 sin(pi x) on [-1, 0] and w_2 = a (1 - x) + b_2 sin(pi x)
/// on [0, 1]. The sine amplitudes are chosen so that D w' is continuous at 0;
/// the side with the smaller coefficient gets amplitude 1/2.
[[nodiscard]] inline std::pair<Problem, ManufacturedSolution>
manufactured_interface_problem(double d1, double d2, Nonlinearity nonlinearity = odd_power_nonlinearity(3)) {
  if (!(d1 > 0.0 && d2 > 0.0)) {
    throw UnknownProblem("manufactured problem requires positive diffusion");
  }
  constexpr double pi = std::numbers::pi;
  constexpr double a = 0.5;
  double b1 = 0.0;
  double b2 = 0.0;
  if (d1 >= d2) {
    b2 = 0.5;
    const double q = d2 * (-a + pi * b2);
    b1 = (q / d1 - a) / pi;
  } else {
    b1 = 0.5;
    const double q = d1 * (a + pi * b1);
    b2 = (q / d2 + a) / pi;
  }
  const std::array<double, 2> amp{b1, b2};
  const std::array<double, 2> diff{d1, d2};
  auto idx = [](const Site &s) { return s.region == 1 ? 0 : 1; };
  auto w = [=](const Site &s) {
    const double lin = s.region == 1 ? a * (1.0 + s.x.x) : a * (1.0 - s.x.x);
    return lin + amp[idx(s)] * std::sin(pi * s.x.x);
  };
  auto dw = [=](const Site &s) {
    const double lin = s.region == 1 ? a : -a;
    return lin + pi * amp[idx(s)] * std::cos(pi * s.x.x);
  };

  ManufacturedSolution ms;
  ms.exact = [w](const Site &s) { return w(s) * std::sin(pi * s.x.y); };
  ms.exact_grad = [w, dw](const Site &s) {
    return Point{dw(s) * std::sin(pi * s.x.y), pi * w(s) * std::cos(pi * s.x.y)};
  };
  auto reaction = nonlinearity.eval;
  ms.source = [=](const Site &s) {
    const double d = diff[idx(s)];
    const double sy = std::sin(pi * s.x.y);
    const double u = w(s) * sy;
    return d * pi * pi * sy * (amp[idx(s)] * std::sin(pi * s.x.x) + w(s)) + reaction(s, u);
  };
  ms.regularity_s = 2.0;

  const Site left{{0.0, 0.0}, 1};
  const Site right{{0.0, 0.0}, 2};
  ms.continuity_residual = std::abs(w(left) - w(right));
  ms.flux_residual = std::abs(d1 * dw(left) - d2 * dw(right));
  if (ms.continuity_residual >= 1e-12 || ms.flux_residual >= 1e-12) {
    throw Error("manufactured solution violates the interface conditions");
  }

  Problem p;
  p.name = "manufactured";
  p.diffusion = diff;
  p.nonlinearity = std::move(nonlinearity);
  p.volume_source = ms.source;
  // Sampled bounds on f; metadata only.
  double fmin = std::numeric_limits<double>::infinity();
  double fmax = -fmin;
  for (int region = 1; region <= 2; ++region) {
    for (int i = 0; i <= 100; ++i) {
      for (int j = 0; j <= 200; ++j) {
        const double x = region == 1 ? -1.0 + i / 100.0 : i / 100.0;
        const double f = ms.source({{x, -1.0 + j / 100.0}, region});
        fmin = std::min(fmin, f);
        fmax = std::max(fmax, f);
      }
    }
  }
  p.source_min = fmin;
  p.source_max = fmax;
  return {std::move(p), std::move(ms)};
}

} // namespace tgfem
