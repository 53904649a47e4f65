#include "roughflow/rde_flow.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include <Eigen/LU>

#include "roughflow/errors.hpp"
#include "roughflow/numerics.hpp"

namespace roughflow {
namespace {

struct StepState {
  SmallVec x;
  SmallMat jac;
  SmallMat inv;
};

// One augmented Davie step: state, J ← (I + Σ g^I Dσ_I) J, K ← K (I + Σ g^I M_I).
void advance(const VectorFieldModel& sigma, const GroupElement& g, StepState& st, bool jac) {
  const int d = sigma.dim();
  if (sigma.is_constant()) {
    auto l1 = g.level(1);
    const Eigen::MatrixXd& a = sigma.constant_value();
    for (int i = 0; i < d; ++i) st.x += l1[i] * a.col(i);
    return;
  }
  const WordFields w = word_fields(sigma, std::span<const double>(st.x.data(), d), g.degree(), jac);
  SmallVec dx = SmallVec::Zero(d);
  SmallMat a = SmallMat::Identity(d, d);
  SmallMat b = SmallMat::Identity(d, d);
  for (int k = 1; k <= g.degree(); ++k) {
    auto level = g.level(k);
    for (std::size_t wi = 0; wi < level.size(); ++wi) {
      const double c = level[wi];
      if (c == 0.0) continue;
      dx += c * w.value[k - 1][wi];
      if (jac) {
        a += c * w.jacobian[k - 1][wi];
        b += c * w.inverse_generator[k - 1][wi];
      }
    }
  }
  st.x += dx;
  if (jac) {
    st.jac = a * st.jac;
    st.inv = st.inv * b;
  }
}

void check_finite(const StepState& st, bool jac, std::size_t step) {
  bool ok = st.x.allFinite();
  if (jac) ok = ok && st.jac.allFinite() && st.inv.allFinite();
  if (!ok) throw DivergenceError("non-finite flow state", step);
}

void check_inputs(const VectorFieldModel& sigma, const LiftedPath& path, std::size_t from,
                  std::size_t to) {
  if (sigma.dim() != path.dim()) throw ShapeError("vector field and path differ in dimension");
  if (from > path.cells() || to > path.cells()) throw DomainError("flow node outside the path grid");
}

StepState initial_state(const Eigen::VectorXd& x, int d) {
  if (x.size() != d) throw ShapeError("start point has the wrong dimension");
  StepState st;
  st.x = x;
  st.jac = SmallMat::Identity(d, d);
  st.inv = SmallMat::Identity(d, d);
  return st;
}

FlowSolution run(const VectorFieldModel& sigma, const LiftedPath& path,
                 std::span<const Eigen::VectorXd> starts, bool with_jacobian, std::size_t from,
                 std::size_t to, bool backward) {
  if (to == kLastNode) to = path.cells();
  check_inputs(sigma, path, from, to);
  if (from > to) throw DomainError("flow needs from <= to");
  if (starts.empty()) throw DomainError("flow needs at least one start point");
  const int d = sigma.dim();
  FlowSolution sol;
  sol.first_node = from;
  sol.backward = backward;
  sol.times.assign(path.times().begin() + from, path.times().begin() + to + 1);
  sol.starts.assign(starts.begin(), starts.end());
  sol.path = &path;
  sol.sigma = &sigma;
  sol.sigma_name = sigma.name();
  sol.path_seed = path.seed;
  sol.path_sample = path.sample_index;
  const std::size_t nodes = to - from + 1;
  sol.states.assign(starts.size(), std::vector<Eigen::VectorXd>(nodes));
  if (with_jacobian) {
    sol.jacobians.assign(starts.size(), std::vector<Eigen::MatrixXd>(nodes));
    sol.inverse_jacobians.assign(starts.size(), std::vector<Eigen::MatrixXd>(nodes));
    sol.inverse_jacobians_rde.assign(starts.size(), std::vector<Eigen::MatrixXd>(nodes));
  }
  std::vector<GroupElement> inverted;
  if (backward) {
    inverted.reserve(to - from);
    for (std::size_t c = from; c < to; ++c) inverted.push_back(group_inverse(path.increment(c)));
  }
  parallel_for(starts.size(), [&](std::size_t s) {
    StepState st = initial_state(starts[s], d);
    auto store = [&](std::size_t k) {
      sol.states[s][k] = st.x;
      if (with_jacobian) {
        sol.jacobians[s][k] = st.jac;
        sol.inverse_jacobians[s][k] = st.jac.inverse();
        sol.inverse_jacobians_rde[s][k] = st.inv;
      }
    };
    if (!backward) {
      store(0);
      for (std::size_t c = from; c < to; ++c) {
        advance(sigma, path.increment(c), st, with_jacobian);
        check_finite(st, with_jacobian, c);
        store(c + 1 - from);
      }
    } else {
      store(nodes - 1);
      for (std::size_t c = to; c-- > from;) {
        advance(sigma, inverted[c - from], st, with_jacobian);
        check_finite(st, with_jacobian, c);
        store(c - from);
      }
    }
  });
  return sol;
}

void check_determinant(const Eigen::MatrixXd& j) {
  if (std::abs(j.determinant()) < 1e-12) throw DegeneracyError("Jacobian determinant below 1e-12");
}

}  // namespace

Eigen::VectorXd davie_step(const Eigen::VectorXd& x, const GroupElement& g,
                           const VectorFieldModel& sigma) {
  if (g.dim() != sigma.dim()) throw ShapeError("increment and vector field differ in dimension");
  StepState st = initial_state(x, sigma.dim());
  advance(sigma, g, st, false);
  return st.x;
}

FlowPoint flow_map(const VectorFieldModel& sigma, const LiftedPath& path,
                   const Eigen::VectorXd& x, std::size_t from, std::size_t to,
                   bool with_jacobian) {
  check_inputs(sigma, path, from, to);
  StepState st = initial_state(x, sigma.dim());
  if (from <= to) {
    for (std::size_t c = from; c < to; ++c) {
      advance(sigma, path.increment(c), st, with_jacobian);
      check_finite(st, with_jacobian, c);
    }
  } else {
    for (std::size_t c = from; c-- > to;) {
      advance(sigma, group_inverse(path.increment(c)), st, with_jacobian);
      check_finite(st, with_jacobian, c);
    }
  }
  return {st.x, st.jac, st.inv};
}

FlowSolution solve_flow(const VectorFieldModel& sigma, const LiftedPath& path,
                        std::span<const Eigen::VectorXd> starts, bool with_jacobian,
                        std::size_t from, std::size_t to) {
  return run(sigma, path, starts, with_jacobian, from, to, false);
}

FlowSolution backward_flow(const VectorFieldModel& sigma, const LiftedPath& path,
                           std::span<const Eigen::VectorXd> starts, bool with_jacobian,
                           std::size_t from, std::size_t to) {
  return run(sigma, path, starts, with_jacobian, from, to, true);
}

std::vector<std::size_t> inverse_jacobian_nodes(const FlowSolution& sol, std::size_t stride) {
  if (stride < 1) throw DomainError("stride must be positive");
  const std::size_t nodes = sol.times.size();
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < nodes; k += stride) out.push_back(k);
  if (out.back() != nodes - 1) out.push_back(nodes - 1);
  return out;
}

std::vector<std::vector<Eigen::MatrixXd>> inverse_jacobian(const FlowSolution& sol,
                                                           InverseMethod method,
                                                           std::size_t stride) {
  if (!sol.has_jacobian()) throw ConfigError("inverse_jacobian needs a solution with Jacobians");
  const auto nodes = inverse_jacobian_nodes(sol, stride);
  std::vector<std::vector<Eigen::MatrixXd>> out(sol.starts.size());
  if (method == InverseMethod::via_psi && (sol.path == nullptr || sol.sigma == nullptr)) {
    throw ConfigError("via_psi inversion needs the solution's path and vector field");
  }
  parallel_for(sol.starts.size(), [&](std::size_t s) {
    out[s].reserve(nodes.size());
    for (std::size_t k : nodes) {
      const Eigen::MatrixXd& j = sol.jacobians[s][k];
      check_determinant(j);
      switch (method) {
        case InverseMethod::direct_rde:
          out[s].push_back(sol.inverse_jacobians_rde[s][k]);
          break;
        case InverseMethod::matrix_inverse:
          out[s].push_back(sol.inverse_jacobians[s][k]);
          break;
        case InverseMethod::via_psi: {
          // Dψ at the image point, flowing back to the anchor node.
          const std::size_t node = sol.first_node + k;
          const std::size_t anchor =
              sol.backward ? sol.first_node + sol.times.size() - 1 : sol.first_node;
          const FlowPoint p = flow_map(*sol.sigma, *sol.path, sol.states[s][k], node, anchor, true);
          out[s].push_back(p.jacobian);
          break;
        }
      }
    }
  });
  return out;
}

ResidualFit residual_order(const VectorFieldModel& sigma, const LiftedPath& path,
                           std::span<const Eigen::VectorXd> starts) {
  const std::size_t m = path.cells();
  if (m < 8) throw DomainError("residual_order needs at least 8 cells");
  const FlowSolution sol = solve_flow(sigma, path, starts, false);
  ResidualFit fit;
  bool all_zero = true;
  double scale = 1.0;
  for (const auto& row : sol.states)
    for (const auto& x : row) scale = std::max(scale, x.cwiseAbs().maxCoeff());
  for (std::size_t len = 2; 4 * len <= m; len *= 2) {
    double sq = 0.0;
    std::size_t count = 0;
    for (std::size_t a = 0; a + len <= m; a += len) {
      const GroupElement w = path.w(a, a + len);
      for (std::size_t s = 0; s < starts.size(); ++s) {
        const Eigen::VectorXd pred = davie_step(sol.states[s][a], w, sigma);
        sq += (sol.states[s][a + len] - pred).squaredNorm();
        ++count;
      }
    }
    const double rms = std::sqrt(sq / count);
    if (rms > 1e-13 * scale) all_zero = false;
    fit.lengths.push_back(path.time(len) - path.time(0));
    fit.residuals.push_back(rms);
  }
  if (all_zero) {
    fit.slope = std::numeric_limits<double>::infinity();
    return fit;
  }
  const LinearFit lf = fit_loglog(fit.lengths, fit.residuals);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  return fit;
}

void write_csv(const std::string& file, const FlowSolution& sol, std::size_t start) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot open " + file + " for writing");
  const int d = static_cast<int>(sol.starts.at(start).size());
  out << std::setprecision(12) << "t";
  for (int c = 0; c < d; ++c) out << ",x" << c;
  if (sol.has_jacobian())
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) out << ",J" << r << c;
  out << '\n';
  for (std::size_t k = 0; k < sol.times.size(); ++k) {
    out << sol.times[k];
    for (int c = 0; c < d; ++c) out << ',' << sol.states[start][k][c];
    if (sol.has_jacobian())
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) out << ',' << sol.jacobians[start][k](r, c);
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + file);
}

}  // namespace roughflow
