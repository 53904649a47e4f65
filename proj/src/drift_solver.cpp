#include "roughflow/drift_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include <Eigen/LU>
#include <nlohmann/json.hpp>

#include "roughflow/errors.hpp"
#include "roughflow/numerics.hpp"
#include "roughflow/rde_flow.hpp"

namespace roughflow {
namespace {

void check_problem(const DriftModel& b, const VectorFieldModel& sigma, const LiftedPath& path,
                   const Eigen::VectorXd& x0) {
  if (b.dim() != sigma.dim() || path.dim() != sigma.dim() || x0.size() != sigma.dim())
    throw ShapeError("drift, vector field, path and start point differ in dimension");
}

DriftSolveReport make_report(DriftMethod method, const DriftModel& b,
                             const VectorFieldModel& sigma, const LiftedPath& path) {
  DriftSolveReport r;
  r.method = method;
  r.times = path.times();
  r.grid = path.cells();
  r.path_seed = path.seed;
  r.path_sample = path.sample_index;
  r.drift_name = b.name();
  r.sigma_name = sigma.name();
  return r;
}

struct TransformedField {
  Eigen::VectorXd x;  // φ_{0,t_k}(z)
  Eigen::VectorXd f;  // (Dφ_{0,t_k}(z))⁻¹ b(x)
};

TransformedField transformed(const DriftModel& b, const VectorFieldModel& sigma,
                             const LiftedPath& path, const Eigen::VectorXd& z, std::size_t node) {
  const FlowPoint p = flow_map(sigma, path, z, 0, node, true);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(p.jacobian);
  if (std::abs(lu.determinant()) < 1e-12)
    throw DegeneracyError("flow Jacobian determinant below 1e-12 at node " + std::to_string(node));
  return {p.state, lu.solve(b(p.state))};
}

double vec_max(const std::vector<Eigen::VectorXd>& v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, x.cwiseAbs().maxCoeff());
  return m;
}

}  // namespace

std::string to_string(DriftMethod method) {
  return method == DriftMethod::direct ? "direct" : "flow_transform";
}

DriftSolveReport solve_direct(const DriftModel& b, const VectorFieldModel& sigma,
                              const LiftedPath& path, const Eigen::VectorXd& x0) {
  check_problem(b, sigma, path, x0);
  DriftSolveReport r = make_report(DriftMethod::direct, b, sigma, path);
  r.x.reserve(path.cells() + 1);
  r.x.push_back(x0);
  for (std::size_t c = 0; c < path.cells(); ++c) {
    const Eigen::VectorXd& x = r.x.back();
    Eigen::VectorXd next = davie_step(x, path.increment(c), sigma) + (path.time(c + 1) - path.time(c)) * b(x);
    if (!next.allFinite()) throw DivergenceError("non-finite drift solution", c);
    r.x.push_back(std::move(next));
  }
  return r;
}

DriftSolveReport solve_flow_transform(const DriftModel& b, const VectorFieldModel& sigma,
                                      const LiftedPath& path, const Eigen::VectorXd& x0,
                                      TimeStepper stepper, std::size_t check_stride) {
  check_problem(b, sigma, path, x0);
  if (check_stride < 1) throw DomainError("check stride must be positive");
  DriftSolveReport r = make_report(DriftMethod::flow_transform, b, sigma, path);
  r.stepper = stepper;
  const std::size_t m = path.cells();
  r.z.reserve(m + 1);
  r.x.reserve(m + 1);
  r.z.push_back(x0);
  TransformedField cur = transformed(b, sigma, path, x0, 0);
  for (std::size_t k = 0;; ++k) {
    r.x.push_back(cur.x);
    if (k == m) break;
    const double h = path.time(k + 1) - path.time(k);
    Eigen::VectorXd z = r.z.back() + h * cur.f;
    if (stepper == TimeStepper::heun) {
      const TransformedField pred = transformed(b, sigma, path, z, k + 1);
      z = r.z.back() + 0.5 * h * (cur.f + pred.f);
    }
    if (!z.allFinite()) throw DivergenceError("non-finite transformed solution", k);
    r.z.push_back(z);
    cur = transformed(b, sigma, path, z, k + 1);
  }
  std::vector<std::size_t> checked;
  for (std::size_t k = 0; k < m; k += check_stride) checked.push_back(k);
  checked.push_back(m);
  for (std::size_t k : checked) {
    const FlowSolution sol = solve_flow(sigma, path, std::vector<Eigen::VectorXd>{r.z[k]}, false, 0, k);
    r.reconstruction_residual = std::max(r.reconstruction_residual, (sol.states[0].back() - r.x[k]).norm());
  }
  return r;
}

double sup_distance(const DriftSolveReport& a, const DriftSolveReport& b) {
  if (a.x.size() != b.x.size()) throw ShapeError("reports are on different grids");
  double d = 0.0;
  for (std::size_t k = 0; k < a.x.size(); ++k) d = std::max(d, (a.x[k] - b.x[k]).norm());
  return d;
}

SewingResult sewing_integrate(const Germ& germ, std::span<const double> grid,
                              const SewingOptions& options) {
  if (grid.size() < 2) throw DomainError("sewing needs at least two grid nodes");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw DomainError("sewing grid must be increasing");
  if (options.min_depth < 1 || options.max_depth < options.min_depth)
    throw ConfigError("sewing depths must satisfy 1 <= min_depth <= max_depth");
  const std::size_t cells = grid.size() - 1;
  const Eigen::Index d = germ(grid[0], grid[1]).size();

  // piece values of the previous level, used for the additivity defect
  std::vector<Eigen::VectorXd> prev_pieces;
  std::vector<Eigen::VectorXd> prev_values, prev_extrap;
  double prev_gap = 0.0;
  std::vector<double> widths, defects;
  SewingResult res;
  res.times.assign(grid.begin(), grid.end());

  for (int level = 0; level <= options.max_depth; ++level) {
    const std::size_t per_cell = std::size_t{1} << level;
    std::vector<Eigen::VectorXd> pieces(cells * per_cell);
    for (std::size_t c = 0; c < cells; ++c) {
      const double a = grid[c], h = (grid[c + 1] - grid[c]) / static_cast<double>(per_cell);
      for (std::size_t m = 0; m < per_cell; ++m) {
        const double u = m + 1 == per_cell ? grid[c + 1] : a + (m + 1) * h;
        pieces[c * per_cell + m] = germ(a + m * h, u);
        if (pieces[c * per_cell + m].size() != d) throw ShapeError("germ changes dimension");
      }
    }
    std::vector<Eigen::VectorXd> values(grid.size(), Eigen::VectorXd::Zero(d));
    for (std::size_t c = 0; c < cells; ++c) {
      Eigen::VectorXd s = Eigen::VectorXd::Zero(d);
      for (std::size_t m = 0; m < per_cell; ++m) s += pieces[c * per_cell + m];
      values[c + 1] = values[c] + s;
    }
    if (level > 0) {
      double defect = 0.0, width = 0.0;
      for (std::size_t p = 0; p < prev_pieces.size(); ++p) {
        defect = std::max(defect, (prev_pieces[p] - pieces[2 * p] - pieces[2 * p + 1]).lpNorm<Eigen::Infinity>());
      }
      for (std::size_t c = 0; c < cells; ++c) width = std::max(width, (grid[c + 1] - grid[c]) / (per_cell / 2));
      widths.push_back(width);
      defects.push_back(defect);
      res.additivity_residual = defect;
    }
    std::vector<Eigen::VectorXd> extrap = values;
    if (level > 0) {
      double gap = 0.0;
      for (std::size_t k = 0; k < grid.size(); ++k)
        gap = std::max(gap, (values[k] - prev_values[k]).lpNorm<Eigen::Infinity>());
      res.level_gaps.push_back(gap);
      if (level > 1 && prev_gap > 0.0) {
        const double r = gap / prev_gap;
        if (r > 0.0 && r < 0.95)
          for (std::size_t k = 0; k < grid.size(); ++k)
            extrap[k] = values[k] + (values[k] - prev_values[k]) * (r / (1.0 - r));
      }
      const double scale = std::max(1.0, vec_max(extrap));
      double change = 0.0;
      if (!prev_extrap.empty())
        for (std::size_t k = 0; k < grid.size(); ++k)
          change = std::max(change, (extrap[k] - prev_extrap[k]).lpNorm<Eigen::Infinity>());
      const bool converged = gap <= options.tolerance * scale ||
                             (level > 1 && change <= options.tolerance * scale);
      prev_gap = gap;
      if (level >= options.min_depth && converged) {
        res.values = extrap;
        res.depth = level;
        break;
      }
    }
    prev_values = std::move(values);
    prev_extrap = std::move(extrap);
    prev_pieces = std::move(pieces);
  }
  std::size_t positive = 0;
  for (double v : defects) positive += v > 0.0;
  res.additivity_exponent =
      positive >= 2 ? fit_loglog(widths, defects).slope : std::numeric_limits<double>::infinity();
  if (res.values.empty())
    throw ConvergenceError("sewing did not converge within max_depth", res.additivity_exponent);
  return res;
}

NlyResult nly_solve(const AveragedFieldGrid& field, const Eigen::VectorXd& theta0,
                    const NlyOptions& options) {
  if (theta0.size() != field.dim()) throw ShapeError("initial value has the wrong dimension");
  NlyResult res;
  res.times = field.times;
  res.nu = pathwise_time_exponent(field);
  if (!(res.nu > 0.5))
    throw ConvergenceError("time exponent of the averaged field is <= 1/2: outside the Young regime",
                           res.nu);
  const std::size_t nodes = field.times.size();
  const std::size_t max_it = options.max_iterations == 0 ? nodes + 1 : options.max_iterations;
  std::vector<Eigen::VectorXd> theta(nodes, theta0);
  auto sums = [&](const std::vector<Eigen::VectorXd>& th) {
    std::vector<Eigen::VectorXd> out(nodes, theta0);
    for (std::size_t k = 0; k + 1 < nodes; ++k) out[k + 1] = out[k] + field.increment(k, k + 1, th[k]);
    return out;
  };
  bool converged = false;
  for (std::size_t it = 1; it <= max_it; ++it) {
    std::vector<Eigen::VectorXd> next = sums(theta);
    double diff = 0.0;
    for (std::size_t k = 0; k < nodes; ++k) diff = std::max(diff, (next[k] - theta[k]).norm());
    if (!std::isfinite(diff)) throw DivergenceError("non-finite nonlinear Young iterate", it);
    theta = std::move(next);
    res.iterations = it;
    if (diff <= options.tolerance * std::max(1.0, vec_max(theta))) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("nonlinear Young iteration did not settle", res.nu);
  const std::vector<Eigen::VectorXd> check = sums(theta);
  for (std::size_t k = 0; k < nodes; ++k) res.residual = std::max(res.residual, (check[k] - theta[k]).norm());
  res.theta = std::move(theta);
  return res;
}

StabilityReport stability_gap(const DriftModel& b1, const DriftModel& b2, const Eigen::VectorXd& x1,
                              const Eigen::VectorXd& x2, const VectorFieldModel& sigma,
                              const LiftedPath& path, const SpaceGrid& space) {
  const DriftSolveReport r1 = solve_flow_transform(b1, sigma, path, x1);
  const DriftSolveReport r2 = solve_flow_transform(b2, sigma, path, x2);
  StabilityReport s;
  for (std::size_t k = 0; k < r1.z.size(); ++k) s.gap = std::max(s.gap, (r1.z[k] - r2.z[k]).norm());
  s.input_gap = (x1 - x2).norm();
  const SpaceGrid grid = space.nodes.empty()
                             ? SpaceGrid::box(0.5 * (x1 + x2), std::max(1.0, s.input_gap), 5)
                             : space;
  const AveragedFieldGrid t1 = eval_averaged_field(b1, sigma, path, grid);
  const AveragedFieldGrid t2 = eval_averaged_field(b2, sigma, path, grid);
  for (std::size_t k = 0; k < t1.times.size(); ++k)
    for (std::size_t j = 0; j < grid.size(); ++j)
      s.field_gap = std::max(s.field_gap, (t1.values[k][j] - t2.values[k][j]).norm());
  const double denom = s.input_gap + s.field_gap;
  s.k_emp = denom > 0.0 ? s.gap / denom : 0.0;
  return s;
}

void write_csv(const std::string& file, const DriftSolveReport& report) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot open " + file + " for writing");
  const Eigen::Index d = report.x.empty() ? 0 : report.x.front().size();
  out << std::setprecision(12) << "t";
  for (Eigen::Index c = 0; c < d; ++c) out << ",x" << c;
  if (!report.z.empty())
    for (Eigen::Index c = 0; c < d; ++c) out << ",z" << c;
  out << '\n';
  for (std::size_t k = 0; k < report.x.size(); ++k) {
    out << report.times[k];
    for (Eigen::Index c = 0; c < d; ++c) out << ',' << report.x[k][c];
    if (!report.z.empty())
      for (Eigen::Index c = 0; c < d; ++c) out << ',' << report.z[k][c];
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + file);
}

nlohmann::json to_json(const DriftSolveReport& r) {
  return {{"method", to_string(r.method)},
          {"stepper", r.stepper == TimeStepper::euler ? "euler" : "heun"},
          {"grid", r.grid},
          {"path_seed", r.path_seed},
          {"path_sample", r.path_sample},
          {"drift", r.drift_name},
          {"sigma", r.sigma_name},
          {"reconstruction_residual", r.reconstruction_residual}};
}

nlohmann::json to_json(const StabilityReport& r) {
  return {{"gap", r.gap}, {"input_gap", r.input_gap}, {"field_gap", r.field_gap}, {"k_emp", r.k_emp}};
}

}  // namespace roughflow
