#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tgfem/analysis.hpp"
#include "tgfem/config.hpp"
#include "tgfem/mesh.hpp"
#include "tgfem/mesh_audit.hpp"
#include "tgfem/problems.hpp"
#include "tgfem/solvers.hpp"
#include "tgfem/twogrid.hpp"

namespace tgfem {

/// Everything a batch study needs. Defaults reproduce the power11 experiment
/// on (-1,1)^2 with the high-diffusion block (-1/2,1/2)^2.
struct StudyConfig {
  std::string problem = "power11";
  Parameters params;
  Rect domain{-1.0, 1.0, -1.0, 1.0};
  Rect interface_box{-0.5, 0.5, -0.5, 0.5};
  int coarsest_n = 4;
  int levels = 5;
  int reference_levels = 2; // extra refinements for the reference solution

  double abs_tol = 1e-10;
  double rel_tol = 1e-12;
  int max_iters = 50;
  double linear_tol = 1e-12;
  int quad_degree = kDefaultTriangleDegree;

  double s = 2.0;
  double tau = 2.0;
  SnapMode snap = SnapMode::up;

  std::string out_dir = ".";
  bool deterministic = false; // timing columns written as 0

  [[nodiscard]] bool manufactured() const { return problem == "manufactured"; }
};

namespace detail {

inline Rect parse_rect(const KeyValueConfig &kv, const std::string &key, const Rect &fallback) {
  if (!kv.has(key)) {
    kv.mark_used(key);
    return fallback;
  }
  const auto v = kv.get_doubles(key, {});
  if (v.size() != 4) {
    throw ConfigError("key '" + key + "' expects four numbers: x0 x1 y0 y1");
  }
  if (!(v[0] < v[1] && v[2] < v[3])) {
    throw ConfigError("key '" + key + "' describes an empty rectangle");
  }
  return {v[0], v[1], v[2], v[3]};
}

inline SnapMode parse_snap(const std::string &text) {
  if (text == "up") {
    return SnapMode::up;
  }
  if (text == "nearest") {
    return SnapMode::nearest;
  }
  throw ConfigError("snap must be 'up' or 'nearest', got '" + text + "'");
}

} // namespace detail

inline void validate_study_config(const StudyConfig &c) {
  if (c.coarsest_n < 2) {
    throw ConfigError("mesh.coarsest_n must be at least 2");
  }
  if (c.levels < 1) {
    throw ConfigError("mesh.levels must be at least 1");
  }
  if (c.reference_levels < 1) {
    throw ConfigError("study.reference_levels must be at least 1");
  }
  if (!(c.abs_tol > 0.0) || !(c.rel_tol > 0.0) || !(c.linear_tol > 0.0) || c.max_iters < 1) {
    throw ConfigError("solver tolerances must be positive");
  }
  if (c.quad_degree < 1 || c.quad_degree > kMaxTriangleDegree) {
    throw ConfigError("solver.quad_degree must lie in [1, " + std::to_string(kMaxTriangleDegree) + "]");
  }
  if (!(c.s > 1.0) || !(c.tau > 1.0)) {
    throw ConfigError("twogrid.s and twogrid.tau must exceed 1");
  }
}

/// Reads a StudyConfig; unknown keys are rejected so typos do not pass silently.
[[nodiscard]] inline StudyConfig study_config_from(const KeyValueConfig &kv) {
  StudyConfig c;
  c.problem = kv.get_string("problem.name", c.problem);
  for (const auto &[key, value] : kv.section("problem")) {
    if (key == "name") {
      continue;
    }
    c.params[key] = kv.get_double("problem." + key, 0.0);
  }
  if (c.manufactured()) {
    c.domain = manufactured_domain();
    c.interface_box = manufactured_interface_box();
  }
  c.domain = detail::parse_rect(kv, "mesh.domain", c.domain);
  c.interface_box = detail::parse_rect(kv, "mesh.interface_box", c.interface_box);
  c.coarsest_n = kv.get_int("mesh.coarsest_n", c.coarsest_n);
  c.levels = kv.get_int("mesh.levels", c.levels);
  c.reference_levels = kv.get_int("study.reference_levels", c.reference_levels);
  c.abs_tol = kv.get_double("solver.abs_tol", c.abs_tol);
  c.rel_tol = kv.get_double("solver.rel_tol", c.rel_tol);
  c.max_iters = kv.get_int("solver.max_iters", c.max_iters);
  c.linear_tol = kv.get_double("solver.linear_tol", c.linear_tol);
  c.quad_degree = kv.get_int("solver.quad_degree", c.quad_degree);
  c.s = kv.get_double("twogrid.s", c.s);
  c.tau = kv.get_double("twogrid.tau", c.tau);
  c.snap = detail::parse_snap(kv.get_string("twogrid.snap", "up"));
  c.out_dir = kv.get_string("output.dir", c.out_dir);
  if (const auto unused = kv.unused_keys(); !unused.empty()) {
    throw ConfigError("unknown configuration key '" + unused.front() + "'");
  }
  validate_study_config(c);
  return c;
}

[[nodiscard]] inline StudyConfig load_study_config(const std::string &path) {
  std::ifstream is(path);
  if (!is) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  return study_config_from(KeyValueConfig::parse(is));
}

struct StudyProblem {
  Problem problem;
  std::optional<ManufacturedSolution> exact;
};

[[nodiscard]] inline StudyProblem make_study_problem(const StudyConfig &c) {
  if (c.manufactured()) {
    double d1 = 1000.0;
    double d2 = 1.0;
    for (const auto &[k, v] : c.params) {
      if (k == "d1") {
        d1 = v;
      } else if (k == "d2") {
        d2 = v;
      } else {
        throw UnknownProblem("manufactured: unknown parameter '" + k + "'");
      }
    }
    auto [p, ms] = manufactured_interface_problem(d1, d2);
    return {std::move(p), std::move(ms)};
  }
  return {builtin_problem(c.problem, c.params), std::nullopt};
}

/// Nominal grid spacing (domain width / subdivisions) of a level.
[[nodiscard]] inline double level_spacing(const StudyConfig &c, int level) {
  return c.domain.width() / (static_cast<double>(c.coarsest_n) * std::ldexp(1.0, level));
}

[[nodiscard]] inline std::vector<MeshPtr> study_hierarchy(const StudyConfig &c, int levels) {
  return refine_hierarchy(generate_interface_mesh(c.coarsest_n, c.domain, c.interface_box), levels);
}

[[nodiscard]] inline NewtonOptions newton_options(const StudyConfig &c) {
  NewtonOptions o;
  o.abs_tol = c.abs_tol;
  o.rel_tol = c.rel_tol;
  o.max_iters = static_cast<std::size_t>(c.max_iters);
  return o;
}

/// Newton on the finest mesh of `meshes`, each level started from the
/// prolongated solution of the previous one.
[[nodiscard]] inline FemFunction nested_newton(const std::vector<MeshPtr> &meshes, const Problem &problem,
                                               const NewtonOptions &opts, const QuadratureRule &quad) {
  FemFunction u(meshes.front());
  for (std::size_t l = 0; l < meshes.size(); ++l) {
    FemFunction init = l == 0 ? FemFunction(meshes[0]) : prolongate(u, meshes[l]);
    u = newton_solve(meshes[l], problem, std::move(init), opts, quad).first;
  }
  return u;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

inline std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

inline std::string csv_optional(const std::optional<double> &v) { return v ? csv_number(*v) : std::string(); }

inline std::string csv_ms(double ms, bool deterministic) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", deterministic ? 0.0 : ms);
  return buf;
}

/// Errors measured either against the exact solution or a reference iterate.
class ErrorMeter {
public:
  ErrorMeter(const StudyConfig &c, const StudyProblem &sp, const std::vector<MeshPtr> &meshes, std::ostream *log)
      : diffusion_(sp.problem.diffusion), exact_(sp.exact) {
    if (!exact_) {
      auto ref_meshes = refine_hierarchy(meshes.back(), c.reference_levels + 1);
      if (log) {
        *log << "reference solve on n = " << c.coarsest_n * (1 << (c.levels - 1 + c.reference_levels)) << '\n';
      }
      reference_ = nested_newton(ref_meshes, sp.problem, newton_options(c), triangle_rule(c.quad_degree));
    }
  }

  [[nodiscard]] ErrorRecord operator()(const FemFunction &u) const {
    return exact_ ? error_norms(u, diffusion_, *exact_, triangle_rule(kMaxTriangleDegree))
                  : error_norms(u, diffusion_, *reference_);
  }

private:
  std::array<double, 2> diffusion_;
  std::optional<ManufacturedSolution> exact_;
  std::optional<FemFunction> reference_;
};

} // namespace detail

struct MeshAuditRow {
  int level = 0;
  int n = 0;
  double h = 0.0;
  std::size_t vertices = 0;
  std::size_t triangles = 0;
  AngleReport report;
};

[[nodiscard]] inline std::vector<MeshAuditRow> audit_hierarchy(const StudyConfig &c, const Problem &problem) {
  std::vector<MeshAuditRow> rows;
  const auto meshes = study_hierarchy(c, c.levels);
  for (std::size_t l = 0; l < meshes.size(); ++l) {
    MeshAuditRow r;
    r.level = static_cast<int>(l);
    r.n = c.coarsest_n << l;
    r.h = level_spacing(c, r.level);
    r.vertices = meshes[l]->num_vertices();
    r.triangles = meshes[l]->triangles.size();
    r.report = check_angle_condition(*meshes[l], problem.diffusion);
    rows.push_back(std::move(r));
  }
  return rows;
}

[[nodiscard]] inline int cmd_check_mesh(const StudyConfig &c, bool json, std::ostream &out) {
  const auto sp = make_study_problem(c);
  const auto rows = audit_hierarchy(c, sp.problem);
  bool all = true;
  for (const auto &r : rows) {
    all = all && r.report.passes;
  }
  if (json) {
    nlohmann::json j;
    j["problem"] = c.problem;
    j["all_pass"] = all;
    j["levels"] = nlohmann::json::array();
    for (const auto &r : rows) {
      nlohmann::json pairs = nlohmann::json::array();
      for (const auto &e : r.report.violating_pairs) {
        pairs.push_back({e[0], e[1]});
      }
      j["levels"].push_back({{"level", r.level},
                             {"n", r.n},
                             {"h", r.h},
                             {"vertices", r.vertices},
                             {"triangles", r.triangles},
                             {"passes", r.report.passes},
                             {"worst_offdiag", r.report.worst_offdiag},
                             {"tolerance", r.report.tolerance},
                             {"violating_pairs", pairs}});
    }
    out << j.dump(2) << '\n';
  } else {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%5s %6s %12s %9s %9s %14s %s\n", "level", "n", "h", "vertices", "triangles",
                  "worst_offdiag", "status");
    out << buf;
    for (const auto &r : rows) {
      std::snprintf(buf, sizeof buf, "%5d %6d %12.6g %9zu %9zu %14.6e %s\n", r.level, r.n, r.h, r.vertices,
                    r.triangles, r.report.worst_offdiag,
                    r.report.passes ? "pass" : ("FAIL (" + std::to_string(r.report.violating_pairs.size()) +
                                                " pairs)").c_str());
      out << buf;
    }
  }
  return all ? 0 : 1;
}

struct ConvergeRow {
  int level = 0;
  double h = 0.0;
  std::size_t n_dof = 0;
  std::optional<ErrorRecord> errors; // empty when the solve failed
  std::optional<double> eoc_energy;
  std::optional<double> eoc_l2;
  std::optional<double> eoc_l4;
  std::size_t newton_iters = 0;
  double wall_ms = 0.0;
  std::string failure;
};

/// Full Newton on every level from a zero initial guess; errors against the
/// manufactured solution or a reference solve `reference_levels` finer.
[[nodiscard]] inline std::vector<ConvergeRow> run_converge(const StudyConfig &c, std::ostream *log = nullptr) {
  const auto sp = make_study_problem(c);
  const auto meshes = study_hierarchy(c, c.levels);
  const detail::ErrorMeter meter(c, sp, meshes, log);
  const auto &quad = triangle_rule(c.quad_degree);
  std::vector<ConvergeRow> rows;
  for (std::size_t l = 0; l < meshes.size(); ++l) {
    ConvergeRow row;
    row.level = static_cast<int>(l);
    row.h = level_spacing(c, row.level);
    row.n_dof = meshes[l]->num_free_vertices();
    const auto start = detail::Clock::now();
    try {
      auto [u, report] = newton_solve(meshes[l], sp.problem, FemFunction(meshes[l]), newton_options(c), quad);
      row.wall_ms = detail::elapsed_ms(start);
      row.newton_iters = report.iterations;
      row.errors = meter(u);
    } catch (const NoConvergence &e) {
      row.failure = e.what();
    } catch (const LineSearchStall &e) {
      row.failure = e.what();
    }
    if (log) {
      *log << "level " << l << " h " << row.h << (row.failure.empty() ? " ok" : " FAILED: " + row.failure) << '\n';
    }
    if (l > 0 && rows.back().errors && row.errors) {
      const auto &prev = *rows.back().errors;
      const auto &cur = *row.errors;
      auto rate = [&](double a, double b) -> std::optional<double> {
        if (a == 0.0 || b == 0.0) {
          return std::nullopt;
        }
        return estimate_eoc({rows.back().h, row.h}, {a, b}).front();
      };
      row.eoc_energy = rate(prev.err_energy, cur.err_energy);
      row.eoc_l2 = rate(prev.err_l2, cur.err_l2);
      row.eoc_l4 = rate(prev.err_l4, cur.err_l4);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_converge_csv(const std::vector<ConvergeRow> &rows, std::ostream &os, bool deterministic) {
  os << "level,h,n_dof,err_energy,err_l2,err_l4,eoc_energy,eoc_l2,eoc_l4,newton_iters,wall_ms\n";
  for (const auto &r : rows) {
    os << r.level << ',' << detail::csv_number(r.h) << ',' << r.n_dof << ',';
    if (r.errors) {
      os << detail::csv_number(r.errors->err_energy) << ',' << detail::csv_number(r.errors->err_l2) << ','
         << detail::csv_number(r.errors->err_l4) << ',';
    } else {
      os << ",,,";
    }
    os << detail::csv_optional(r.eoc_energy) << ',' << detail::csv_optional(r.eoc_l2) << ','
       << detail::csv_optional(r.eoc_l4) << ',';
    if (r.errors) {
      os << r.newton_iters << ',' << detail::csv_ms(r.wall_ms, deterministic);
    } else {
      os << ',';
    }
    os << '\n';
  }
}

inline void write_converge_dat(const std::vector<ConvergeRow> &rows, std::ostream &os) {
  os << "# h err_energy err_l2 err_l4\n";
  for (const auto &r : rows) {
    if (r.errors) {
      os << detail::csv_number(r.h) << ' ' << detail::csv_number(r.errors->err_energy) << ' '
         << detail::csv_number(r.errors->err_l2) << ' ' << detail::csv_number(r.errors->err_l4) << '\n';
    }
  }
}

struct TwoGridRow {
  double h = 0.0;
  double coarse_h = 0.0;
  int fine_level = 0;
  int coarse_level = 0;
  std::optional<double> err_direct;
  std::optional<double> err_twogrid;
  std::size_t coarse_newton_iters = 0;
  std::size_t fine_linear_iters = 0;
  double wall_ms_direct = 0.0;
  double wall_ms_twogrid = 0.0;
  std::string failure;

  [[nodiscard]] std::optional<double> ratio() const {
    if (err_direct && err_twogrid && *err_direct > 0.0) {
      return *err_twogrid / *err_direct;
    }
    return std::nullopt;
  }
};

/// For every level with a coarser level available: pick H, run the two-grid
/// method and a direct fine Newton solve, and compare energy errors.
[[nodiscard]] inline std::vector<TwoGridRow> run_twogrid(const StudyConfig &c, std::ostream *log = nullptr) {
  if (c.levels < 2) {
    throw ConfigError("a two-grid study needs at least two levels");
  }
  const auto sp = make_study_problem(c);
  const auto meshes = study_hierarchy(c, c.levels);
  const detail::ErrorMeter meter(c, sp, meshes, log);
  const auto &quad = triangle_rule(c.quad_degree);
  TwoGridOptions tg;
  tg.coarse = newton_options(c);
  tg.fine.tol = c.linear_tol;
  tg.quad_degree = c.quad_degree;
  std::vector<TwoGridRow> rows;
  for (int l = 1; l < c.levels; ++l) {
    TwoGridRow row;
    row.fine_level = l;
    row.h = level_spacing(c, l);
    std::vector<double> available;
    for (int k = 0; k < l; ++k) {
      available.push_back(level_spacing(c, k));
    }
    row.coarse_h = select_coarse_size(row.h, c.s, c.tau, 2, available, c.snap);
    for (int k = 0; k < l; ++k) {
      if (available[static_cast<std::size_t>(k)] == row.coarse_h) {
        row.coarse_level = k;
      }
    }
    const auto &fine = meshes[static_cast<std::size_t>(l)];
    try {
      auto start = detail::Clock::now();
      auto [u_direct, report] = newton_solve(fine, sp.problem, FemFunction(fine), newton_options(c), quad);
      row.wall_ms_direct = detail::elapsed_ms(start);
      row.err_direct = meter(u_direct).err_energy;

      start = detail::Clock::now();
      const auto res = two_grid_solve(meshes[static_cast<std::size_t>(row.coarse_level)], fine, sp.problem, tg);
      row.wall_ms_twogrid = detail::elapsed_ms(start);
      row.coarse_newton_iters = res.coarse_report.iterations;
      row.fine_linear_iters = res.fine_report.iterations;
      row.err_twogrid = meter(res.fine_solution).err_energy;
    } catch (const NoConvergence &e) {
      row.failure = e.what();
    } catch (const LineSearchStall &e) {
      row.failure = e.what();
    }
    if (log) {
      *log << "h " << row.h << " H " << row.coarse_h
           << (row.failure.empty() ? " ok" : " FAILED: " + row.failure) << '\n';
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_twogrid_csv(const std::vector<TwoGridRow> &rows, std::ostream &os, bool deterministic) {
  os << "h,H,err_energy_direct,err_energy_twogrid,ratio,coarse_newton_iters,fine_linear_iters,wall_ms_direct,"
        "wall_ms_twogrid\n";
  for (const auto &r : rows) {
    os << detail::csv_number(r.h) << ',' << detail::csv_number(r.coarse_h) << ',' << detail::csv_optional(r.err_direct)
       << ',' << detail::csv_optional(r.err_twogrid) << ',' << detail::csv_optional(r.ratio()) << ',';
    if (r.failure.empty()) {
      os << r.coarse_newton_iters << ',' << r.fine_linear_iters << ',' << detail::csv_ms(r.wall_ms_direct, deterministic)
         << ',' << detail::csv_ms(r.wall_ms_twogrid, deterministic);
    } else {
      os << ",,,";
    }
    os << '\n';
  }
}

inline void write_twogrid_dat(const std::vector<TwoGridRow> &rows, std::ostream &os) {
  os << "# h err_energy_direct err_energy_twogrid\n";
  for (const auto &r : rows) {
    if (r.failure.empty()) {
      os << detail::csv_number(r.h) << ' ' << detail::csv_number(*r.err_direct) << ' '
         << detail::csv_number(*r.err_twogrid) << '\n';
    }
  }
}

namespace detail {

inline std::ofstream open_output(const std::string &dir, const std::string &name) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream os(path);
  if (!os) {
    throw ConfigError("cannot write '" + path.string() + "'");
  }
  return os;
}

} // namespace detail

/// Writes converge.csv and converge.dat into the output directory.
[[nodiscard]] inline int cmd_converge(const StudyConfig &c, std::ostream *log = nullptr) {
  const auto rows = run_converge(c, log);
  auto csv = detail::open_output(c.out_dir, "converge.csv");
  write_converge_csv(rows, csv, c.deterministic);
  auto dat = detail::open_output(c.out_dir, "converge.dat");
  write_converge_dat(rows, dat);
  for (const auto &r : rows) {
    if (!r.failure.empty()) {
      return 1;
    }
  }
  return 0;
}

/// Writes twogrid.csv and twogrid.dat into the output directory.
[[nodiscard]] inline int cmd_twogrid(const StudyConfig &c, std::ostream *log = nullptr) {
  const auto rows = run_twogrid(c, log);
  auto csv = detail::open_output(c.out_dir, "twogrid.csv");
  write_twogrid_csv(rows, csv, c.deterministic);
  auto dat = detail::open_output(c.out_dir, "twogrid.dat");
  write_twogrid_dat(rows, dat);
  for (const auto &r : rows) {
    if (!r.failure.empty()) {
      return 1;
    }
  }
  return 0;
}

/// Newton solve on the finest configured level; writes mesh.txt and
/// solution.txt (one nodal value per line, mesh vertex order).
[[nodiscard]] inline int cmd_solve(const StudyConfig &c, std::ostream &out) {
  const auto sp = make_study_problem(c);
  const auto meshes = study_hierarchy(c, c.levels);
  const auto &mesh = meshes.back();
  auto opts = newton_options(c);
  opts.log = &out;
  auto [u, report] = newton_solve(mesh, sp.problem, FemFunction(mesh), opts, triangle_rule(c.quad_degree));
  auto mesh_os = detail::open_output(c.out_dir, "mesh.txt");
  save_mesh(*mesh, mesh_os);
  auto sol = detail::open_output(c.out_dir, "solution.txt");
  char buf[64];
  double lo = u[0];
  double hi = u[0];
  for (double v : u.coeffs) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    sol << buf;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  out << "vertices " << mesh->num_vertices() << " newton_iters " << report.iterations << " min " << lo << " max "
      << hi << '\n';
  return 0;
}

/// Exit status for an exception escaping a command: 2 for configuration and
/// input problems, 1 for solver failures.
[[nodiscard]] inline int exit_code_for(const std::exception &e) {
  if (dynamic_cast<const ConfigError *>(&e) || dynamic_cast<const ParseError *>(&e) ||
      dynamic_cast<const UnknownProblem *>(&e) || dynamic_cast<const InterfaceNotResolved *>(&e) ||
      dynamic_cast<const InvalidSubdivision *>(&e) || dynamic_cast<const InvalidRegularity *>(&e) ||
      dynamic_cast<const ValidationError *>(&e) || dynamic_cast<const NotAVertex *>(&e)) {
    return 2;
  }
  return 1;
}

} // namespace tgfem
