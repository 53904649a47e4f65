#include "roughflow/cli_harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "roughflow/averaged_field.hpp"
#include "roughflow/drift_solver.hpp"
#include "roughflow/errors.hpp"
#include "roughflow/function_spaces.hpp"
#include "roughflow/gaussian_process.hpp"
#include "roughflow/malliavin_checks.hpp"
#include "roughflow/numerics.hpp"
#include "roughflow/rde_flow.hpp"
#include "roughflow/tensor_algebra.hpp"

namespace roughflow {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::array<ExperimentKind, 8> kKinds = {
    ExperimentKind::sample,    ExperimentKind::lift,       ExperimentKind::solve,
    ExperimentKind::convergence, ExperimentKind::averaging, ExperimentKind::malliavin,
    ExperimentKind::uniqueness, ExperimentKind::spaces};

const std::vector<std::string> kSigmaNames = {"identity", "smooth_elliptic", "diagonal_linear"};
const std::vector<std::string> kDriftNames = {"zero", "smooth", "weierstrass", "lp_block", "smooth_bump"};

bool contains(const std::vector<std::string>& names, const std::string& s) {
  return std::find(names.begin(), names.end(), s) != names.end();
}

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

bool power_of_two(std::size_t n) { return n && (n & (n - 1)) == 0; }

std::string fmt12(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round12(v);
}

json rounded(const json& j) {
  if (j.is_number_float()) return number(j.get<double>());
  if (j.is_array() || j.is_object()) {
    json out = j;
    for (auto& item : out) item = rounded(item);
    return out;
  }
  return j;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + file.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Suite context: resolved config, artifact registration, metrics.
struct Suite {
  const ExperimentConfig& c;
  fs::path dir;
  RunReport& report;

  std::string file(const std::string& name) {
    report.artifacts.push_back(name);
    return (dir / name).string();
  }
  void json_artifact(const std::string& name, const json& j) { write_text(file(name), rounded(j).dump(2) + "\n"); }
  void add(Metric m) { report.metrics.push_back(std::move(m)); }
  std::uint64_t seed(std::uint64_t index, std::string_view tag) const { return stream_seed(*c.seed, index, tag); }
};

LiftedPath driver(const ExperimentConfig& c, std::size_t cells, std::uint64_t seed, bool attach = false) {
  const auto model = CovarianceModel::fbm(c.hurst);
  const auto sample = sample_fbm_grid(model, cells * c.refinement, 1, seed, c.dim);
  auto path = lift_path(sample, 0, c.degree, static_cast<int>(c.refinement));
  if (attach) path.attach_covariance(model);
  return path;
}

void run_sample(Suite& s) {
  const auto& c = s.c;
  const std::size_t m = c.grid, n = c.samples;
  const auto sample = sample_fbm_grid(CovarianceModel::fbm(c.hurst), m, n, *c.seed, c.dim);
  const double pooled = static_cast<double>(n) * c.dim;
  std::ostringstream csv;
  csv << "lag,length,expected,estimate,stderr,z\n";
  double max_z = 0.0, sum_z = 0.0;
  int lags = 0;
  for (std::size_t lag = 1; lag <= m / 2; lag *= 2) {
    const std::size_t a = (m - lag) / 2, b = a + lag;
    const double length = sample.times[b] - sample.times[a];
    const double expected = std::pow(length, 2 * c.hurst);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      for (int d = 0; d < c.dim; ++d) {
        const double inc = sample.values[k][d][b] - sample.values[k][d][a];
        acc += inc * inc;
      }
    const double estimate = acc / pooled;  // the mean is known to be zero
    const double se = expected * std::sqrt(2.0 / pooled);
    const double z = (estimate - expected) / se;
    max_z = std::max(max_z, std::abs(z));
    sum_z += std::abs(z);
    ++lags;
    csv << lag << ',' << fmt12(length) << ',' << fmt12(expected) << ',' << fmt12(estimate) << ','
        << fmt12(se) << ',' << fmt12(z) << '\n';
  }
  write_text(s.file("sample_variances.csv"), csv.str());
  write_csv(s.file("sample_path0.csv"), sample, 0);
  s.add(Metric::at_most("increment_variance_max_abs_z", max_z, 3.0, "closed-form"));
  s.add(Metric::report("increment_variance_mean_abs_z", sum_z / lags, "measurement"));
}

void run_lift(Suite& s) {
  const auto& c = s.c;
  const auto model = CovarianceModel::fbm(c.hurst);
  const auto sample = sample_fbm_grid(model, c.grid * c.refinement, 1, *c.seed, c.dim);
  const auto path = lift_path(sample, 0, c.degree, static_cast<int>(c.refinement));
  const auto g = path.w(0, path.cells());
  const double scale = std::max(1.0, max_abs(g.tensor().data()));

  std::vector<Eigen::VectorXd> points;
  for (std::size_t k = 0; k < sample.times.size(); ++k) points.push_back(sample.point(0, k));
  const auto direct = pl_signature(points, c.degree);
  const std::size_t mid = path.cells() / 2;
  const auto split = path.w(0, mid) * path.w(mid, path.cells());
  const auto roundtrip = group_exp(group_log(g));
  const auto unit = g * group_inverse(g);

  s.add(Metric::at_most("chen_vs_direct_signature", max_abs_diff(g.tensor(), direct.tensor()) / scale, 1e-10,
                        "identity"));
  s.add(Metric::at_most("chen_split_defect", max_abs_diff(g.tensor(), split.tensor()) / scale, 1e-12, "identity"));
  s.add(Metric::at_most("exp_log_roundtrip", max_abs_diff(g.tensor(), roundtrip.tensor()) / scale, 1e-12,
                        "identity"));
  s.add(Metric::at_most("inverse_defect",
                        max_abs_diff(unit.tensor(), GroupElement::identity(c.dim, c.degree).tensor()) / scale,
                        1e-12, "identity"));
  s.add(Metric::at_most("shuffle_defect", shuffle_defect(g.tensor()), 1e-12, "identity"));
  s.add(Metric::report("signature_homogeneous_norm", homogeneous_norm(g), "measurement"));
  s.json_artifact("lift.json", to_json(path));
  s.json_artifact("signature.json", to_json(g.tensor()));
}

void run_solve(Suite& s) {
  const auto& c = s.c;
  const auto path = driver(c, c.grid, *c.seed);
  const auto sigma = make_sigma(c.sigma, c.dim);
  const auto b = make_drift(c.drift, c.dim, c.kappa, s.seed(0, "drift"));
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(c.dim, 0.3);
  const auto direct = solve_direct(b, sigma, path, x0);
  const auto transformed = solve_flow_transform(b, sigma, path, x0);
  s.add(Metric::at_most("flow_transform_reconstruction", transformed.reconstruction_residual, 1e-8, "identity"));
  s.add(Metric::report("direct_vs_flow_transform_sup", sup_distance(direct, transformed), "measurement"));
  write_csv(s.file("solve_direct.csv"), direct);
  write_csv(s.file("solve_flow_transform.csv"), transformed);
}

void run_convergence(Suite& s) {
  const auto& c = s.c;
  const auto fine = driver(c, c.grid, *c.seed);
  const auto sigma = make_sigma(c.sigma, c.dim);
  const std::vector<Eigen::VectorXd> starts = {Eigen::VectorXd::Constant(c.dim, 0.1)};
  const auto reference = solve_flow(sigma, fine, starts, false);
  const Eigen::VectorXd end = reference.states[0].back();

  std::vector<double> grids, errors;
  std::ostringstream csv;
  csv << "grid,residual_exponent,endpoint_error\n";
  double finest_slope = 0.0;
  for (std::size_t factor : {8, 4, 2, 1}) {
    const auto path = fine.coarsen(factor);
    const auto fit = residual_order(sigma, path, starts);
    const auto sol = solve_flow(sigma, path, starts, false);
    const double err = (sol.states[0].back() - end).norm();
    csv << path.cells() << ',' << fmt12(fit.slope) << ',' << fmt12(err) << '\n';
    if (factor > 1) {
      grids.push_back(static_cast<double>(path.cells()));
      errors.push_back(err);
    }
    if (factor == 1) finest_slope = fit.slope;
  }
  write_text(s.file("convergence.csv"), csv.str());
  s.add(Metric::at_least("davie_residual_exponent", finest_slope, 1.05, "scaling-law"));
  s.add(Metric::report("davie_residual_exponent_theory", (c.degree + 1) * c.hurst, "scaling-law"));
  const auto order = fit_loglog(grids, errors);
  s.add(Metric::report("endpoint_self_convergence_order", -order.slope, "measurement"));
}

void run_averaging(Suite& s) {
  const auto& c = s.c;
  FrequencyDecayConfig cfg;
  cfg.samples = c.samples;
  cfg.steps = c.grid;
  cfg.seed = *c.seed;
  cfg.degree = c.degree;
  const auto r = frequency_decay_experiment(make_sigma(c.sigma, c.dim), CovarianceModel::fbm(c.hurst), cfg);
  s.add(Metric::within("frequency_decay_slope", r.slope, -1.0 / (2 * c.hurst), 0.3, "scaling-law"));
  s.add(Metric::report("frequency_decay_slope_ci", r.slope_ci, "measurement"));
  s.json_artifact("averaging.json", to_json(r));
}

void run_malliavin(Suite& s) {
  const auto& c = s.c;
  const auto path = driver(c, c.grid, *c.seed, true);
  const auto id = VectorFieldModel::identity(c.dim);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(c.dim, 0.1);

  json identity_reports = json::array();
  double id_err = 0.0;
  for (auto [a, b] : {std::pair{0.0, 1.0}, std::pair{0.25, 0.75}}) {
    const auto r = malliavin_covariance(id, path, x, a, b);
    const double scale = std::pow(b - a, 2 * c.hurst);
    const Eigen::MatrixXd expect = scale * Eigen::MatrixXd::Identity(c.dim, c.dim);
    id_err = std::max(id_err, (r.gamma - expect).cwiseAbs().maxCoeff() / scale);
    identity_reports.push_back(to_json(r));
  }
  s.add(Metric::at_most("identity_gamma_rel_error", id_err, 0.01, "closed-form"));

  const auto fit = lambda_min_scaling(make_sigma(c.sigma, c.dim), path, x, 7);
  s.add(Metric::within("lambda_min_exponent", fit.exponent, 2 * c.hurst, 0.15, "scaling-law"));
  s.add(Metric::at_least("lambda_min_over_scaled", fit.min_over_scaled, 0.0, "invariant"));

  SmoothingDecayConfig cfg;
  cfg.samples = c.samples;
  cfg.seed = s.seed(0, "smoothing");
  cfg.levels = 10;
  cfg.degree = c.degree;
  const auto decay = smoothing_decay_experiment(id, CovarianceModel::fbm(c.hurst), cfg);
  double oracle_err = 0.0;
  for (std::size_t i = decay.fit_first; i <= decay.fit_last; ++i)
    oracle_err = std::max(oracle_err, std::abs(decay.estimates[i] / decay.oracle[i] - 1));
  s.add(Metric::at_most("additive_smoothing_oracle_rel_error", oracle_err, 0.1, "closed-form"));
  s.add(Metric::report("additive_smoothing_slope", decay.slope, "measurement"));

  s.json_artifact("malliavin_identity.json", identity_reports);
  s.json_artifact("malliavin_scaling.json", to_json(fit));
  s.json_artifact("smoothing_additive.json", to_json(decay));
}

UniquenessConfig uniqueness_config(const ExperimentConfig& c, double kappa) {
  UniquenessConfig u;
  u.hurst = c.hurst;
  u.kappa = kappa;
  u.delta = c.delta;
  u.paths = c.samples;
  u.grid = c.grid;
  u.dim = c.dim;
  u.degree = c.degree;
  u.seed = *c.seed;
  return u;
}

void run_uniqueness(Suite& s) {
  const auto& c = s.c;
  const auto main = uniqueness_experiment(uniqueness_config(c, c.kappa));
  s.add(Metric::at_least("fraction_within_gap", main.fraction_within, 0.9, "measurement"));
  s.add(Metric::report("median_gap_ratio", main.median_ratio, "measurement"));
  s.add(Metric::report("max_gap_ratio", main.max_ratio, "measurement"));
  const auto rough = uniqueness_experiment(uniqueness_config(c, 0.1));
  s.add(Metric::report("contrast_kappa_0.1_fraction_within_gap", rough.fraction_within, "measurement"));
  s.add(Metric::report("contrast_kappa_0.1_median_gap_ratio", rough.median_ratio, "measurement"));
  s.add(Metric::report("contrast_kappa_0.1_max_gap_ratio", rough.max_ratio, "measurement"));
  s.json_artifact("uniqueness.json", to_json(main));
  s.json_artifact("uniqueness_contrast.json", to_json(rough));
}

void run_spaces(Suite& s) {
  const auto& c = s.c;
  constexpr double pi = std::numbers::pi;
  SynthDriftOptions o;
  o.dim = 1;
  o.levels = 10;
  const auto w = synth_drift(DriftKind::weierstrass, c.kappa, s.seed(0, "spaces-drift"), o);
  const auto f = GridFunction::sample(1, c.grid, 2 * pi, [&](std::span<const double> x) {
    return w(Eigen::VectorXd::Constant(1, x[0]))[0];
  });
  const int top = max_block(f);
  const auto blocks = lp_blocks(f, top);
  double err = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double sum = 0.0;
    for (const auto& b : blocks) sum += b.values[i];
    err = std::max(err, std::abs(sum - f.values[i]));
  }
  s.add(Metric::at_most("block_reconstruction_error", err / std::max(1.0, lp_norm(f, INFINITY)), 1e-8,
                        "identity"));

  o.dim = c.dim;
  o.levels = 16;
  const auto wide = synth_drift(DriftKind::weierstrass, c.kappa, s.seed(1, "spaces-drift"), o);
  HolderProbe probe;
  probe.lower = Eigen::VectorXd::Zero(c.dim);
  probe.upper = Eigen::VectorXd::Constant(c.dim, 2 * pi);
  probe.probes = 1000;
  probe.seed = s.seed(0, "spaces-probe");
  probe.scales.clear();
  for (int l = 3; l <= 12; ++l) probe.scales.push_back(std::ldexp(1.0, -l));
  const auto scan = holder_exponent_scan([&](const Eigen::VectorXd& x) { return wide(x); }, probe);
  s.add(Metric::within("weierstrass_exponent", scan.exponent, c.kappa, 0.1, "closed-form"));

  const auto paths = sample_fbm_grid(CovarianceModel::fbm(c.hurst), 1024, c.samples, s.seed(0, "spaces-grr"));
  std::size_t violations = 0, flagged = 0;
  json grr = json::array();
  for (std::size_t n = 0; n < paths.samples(); ++n) {
    const auto& v = paths.values[n][0];
    const auto at = grr_bound(paths.times, v, c.hurst, 16.0);
    const auto above = grr_bound(paths.times, v, c.hurst + 0.2, 16.0);
    violations += at.violations;
    flagged += above.divergent ? 1 : 0;
    grr.push_back({{"at_hurst", to_json(at)}, {"above_hurst", to_json(above)}});
  }
  s.add(Metric::at_most("grr_violations_at_hurst", static_cast<double>(violations), 0.0, "invariant"));
  s.add(Metric::at_least("grr_divergence_flagged_fraction",
                         static_cast<double>(flagged) / static_cast<double>(paths.samples()), 1.0, "scaling-law"));
  s.json_artifact("spaces_spectrum.json", to_json(block_spectrum(f, top)));
  s.json_artifact("spaces_scan.json", {{"scales", scan.scales}, {"oscillation", scan.oscillation},
                                       {"exponent", scan.exponent}, {"kappa", c.kappa}});
  s.json_artifact("spaces_grr.json", grr);
}

struct SuiteDefaults {
  std::size_t grid, samples;
  const char* sigma;
};

SuiteDefaults defaults(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::sample: return {512, 2000, "identity"};
    case ExperimentKind::lift: return {256, 1, "identity"};
    case ExperimentKind::solve: return {512, 1, "smooth_elliptic"};
    case ExperimentKind::convergence: return {1024, 1, "smooth_elliptic"};
    case ExperimentKind::averaging: return {std::size_t{1} << 17, 2000, "identity"};
    case ExperimentKind::malliavin: return {1024, 20000, "smooth_elliptic"};
    case ExperimentKind::uniqueness: return {1024, 50, "identity"};
    case ExperimentKind::spaces: return {4096, 3, "identity"};
  }
  throw ConfigError("unknown experiment kind");
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::sample: return "sample";
    case ExperimentKind::lift: return "lift";
    case ExperimentKind::solve: return "solve";
    case ExperimentKind::convergence: return "convergence";
    case ExperimentKind::averaging: return "averaging";
    case ExperimentKind::malliavin: return "malliavin";
    case ExperimentKind::uniqueness: return "uniqueness";
    case ExperimentKind::spaces: return "spaces";
  }
  throw ConfigError("unknown experiment kind");
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (auto k : kKinds)
    if (to_string(k) == name) return k;
  throw ConfigError("unknown experiment kind '" + name + "' (expected one of " + join(experiment_kind_names()) + ")");
}

std::vector<std::string> experiment_kind_names() {
  std::vector<std::string> out;
  for (auto k : kKinds) out.push_back(to_string(k));
  return out;
}

void ExperimentConfig::validate() const {
  if (!seed) throw ConfigError("seed is mandatory");
  if (!(degree >= 1 && degree <= kMaxDegree)) throw ConfigError("degree must be in 1..3");
  if (!(hurst > 0.0 && hurst < 1.0)) throw ConfigError("hurst must be in (0, 1)");
  if (!(hurst * (degree + 1) > 1.0))
    throw ConfigError("hurst must exceed 1/(degree + 1) for a step-" + std::to_string(degree) + " rough path");
  if (!(dim >= 1 && dim <= kFieldMaxDim)) throw ConfigError("dim must be in 1..3");
  if (grid != 0 && !(power_of_two(grid) && grid >= 16 && grid <= (std::size_t{1} << 20)))
    throw ConfigError("grid must be 0 or a power of two in [16, 2^20]");
  if (!(refinement >= 1 && refinement <= 64)) throw ConfigError("refinement must be in 1..64");
  if (samples > 10'000'000) throw ConfigError("samples must be at most 10^7");
  if (!sigma.empty() && !contains(kSigmaNames, sigma))
    throw ConfigError("unknown sigma '" + sigma + "' (expected one of " + join(kSigmaNames) + ")");
  if (!contains(kDriftNames, drift))
    throw ConfigError("unknown drift '" + drift + "' (expected one of " + join(kDriftNames) + ")");
  if (!(kappa > 0.0 && kappa <= 2.0)) throw ConfigError("kappa must be in (0, 2]");
  if (!(delta > 0.0 && delta <= 0.1)) throw ConfigError("delta must be in (0, 0.1]");
  if (output_dir.empty()) throw ConfigError("output directory must not be empty");
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  j["hurst"] = number(c.hurst);
  j["degree"] = c.degree;
  j["dim"] = c.dim;
  j["grid"] = c.grid;
  j["refinement"] = c.refinement;
  j["samples"] = c.samples;
  j["sigma"] = c.sigma;
  j["drift"] = c.drift;
  j["kappa"] = number(c.kappa);
  j["delta"] = number(c.delta);
  j["output_dir"] = c.output_dir;
  return j;
}

VectorFieldModel make_sigma(const std::string& name, int dim) {
  if (name == "identity") return VectorFieldModel::identity(dim);
  if (name == "smooth_elliptic") return VectorFieldModel::smooth_elliptic(dim);
  if (name == "diagonal_linear") {
    Eigen::VectorXd a(dim);
    for (int i = 0; i < dim; ++i) a[i] = 0.5 + 0.25 * i;
    return VectorFieldModel::diagonal_linear(a);
  }
  throw ConfigError("unknown sigma '" + name + "' (expected one of " + join(kSigmaNames) + ")");
}

DriftModel make_drift(const std::string& name, int dim, double kappa, std::uint64_t seed) {
  SynthDriftOptions o;
  o.dim = dim;
  if (name == "zero") return DriftModel::zero(dim);
  if (name == "smooth") return DriftModel::smooth(dim);
  if (name == "weierstrass") return synth_drift(DriftKind::weierstrass, kappa, seed, o);
  if (name == "lp_block") return synth_drift(DriftKind::lp_block, kappa, seed, o);
  if (name == "smooth_bump") return synth_drift(DriftKind::smooth_bump, kappa, seed, o);
  throw ConfigError("unknown drift '" + name + "' (expected one of " + join(kDriftNames) + ")");
}

Metric Metric::at_most(std::string name, double value, double bound, std::string provenance) {
  return {std::move(name), value, "<=", bound, bound, true, value <= bound, std::move(provenance)};
}

Metric Metric::at_least(std::string name, double value, double bound, std::string provenance) {
  return {std::move(name), value, ">=", bound, bound, true, value >= bound, std::move(provenance)};
}

Metric Metric::within(std::string name, double value, double target, double tolerance, std::string provenance) {
  return {std::move(name), value, "|x-target|<=", target, tolerance, true,
          std::abs(value - target) <= tolerance, std::move(provenance)};
}

Metric Metric::report(std::string name, double value, std::string provenance) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {std::move(name), value, "report", nan, nan, false, true, std::move(provenance)};
}

bool RunReport::passed() const {
  return std::all_of(metrics.begin(), metrics.end(), [](const Metric& m) { return !m.gated || m.pass; });
}

RunReport run(const ExperimentConfig& config) {
  config.validate();
  ExperimentConfig c = config;
  const auto d = defaults(c.kind);
  if (c.grid == 0) c.grid = d.grid;
  if (c.samples == 0) c.samples = d.samples;
  if (c.sigma.empty()) c.sigma = d.sigma;

  RunReport report;
  report.config = c;
  const fs::path dir(c.output_dir);
  ensure_dir(dir);
  Suite suite{report.config, dir, report};
  const auto start = std::chrono::steady_clock::now();
  switch (c.kind) {
    case ExperimentKind::sample: run_sample(suite); break;
    case ExperimentKind::lift: run_lift(suite); break;
    case ExperimentKind::solve: run_solve(suite); break;
    case ExperimentKind::convergence: run_convergence(suite); break;
    case ExperimentKind::averaging: run_averaging(suite); break;
    case ExperimentKind::malliavin: run_malliavin(suite); break;
    case ExperimentKind::uniqueness: run_uniqueness(suite); break;
    case ExperimentKind::spaces: run_spaces(suite); break;
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double round12(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(fmt12(v).c_str(), nullptr);
}

json to_json(const RunReport& report) {
  json metrics = json::array();
  for (const auto& m : report.metrics) {
    json j;
    j["name"] = m.name;
    j["value"] = number(m.value);
    j["comparator"] = m.comparator;
    j["target"] = number(m.target);
    j["tolerance"] = number(m.tolerance);
    j["gated"] = m.gated;
    j["pass"] = m.pass;
    j["provenance"] = m.provenance;
    metrics.push_back(std::move(j));
  }
  json j;
  j["config"] = to_json(report.config);
  j["passed"] = report.passed();
  j["metrics"] = std::move(metrics);
  j["artifacts"] = report.artifacts;
  return j;
}

std::string emit_report(const RunReport& report, ReportFormat format, const std::string& dir) {
  const fs::path base(dir);
  ensure_dir(base);
  std::ostringstream out;
  fs::path file;
  switch (format) {
    case ReportFormat::json:
      file = base / "report.json";
      out << to_json(report).dump(2) << '\n';
      break;
    case ReportFormat::csv:
      file = base / "metrics.csv";
      out << "name,value,comparator,target,tolerance,gated,pass,provenance\n";
      for (const auto& m : report.metrics)
        out << m.name << ',' << fmt12(m.value) << ',' << m.comparator << ',' << fmt12(m.target) << ','
            << fmt12(m.tolerance) << ',' << (m.gated ? "true" : "false") << ',' << (m.pass ? "true" : "false")
            << ',' << m.provenance << '\n';
      break;
    case ReportFormat::markdown: {
      file = base / "summary.md";
      const auto& c = report.config;
      out << "# " << to_string(c.kind) << " run\n\n";
      out << "- result: " << (report.passed() ? "PASS" : "FAIL") << '\n';
      out << "- seed: " << (c.seed ? std::to_string(*c.seed) : "none") << '\n';
      out << "- hurst: " << fmt12(c.hurst) << ", degree: " << c.degree << ", dim: " << c.dim
          << ", grid: " << c.grid << ", samples: " << c.samples << '\n';
      out << "- sigma: " << c.sigma << ", drift: " << c.drift << ", kappa: " << fmt12(c.kappa) << '\n';
      out << "- wall clock: " << fmt12(report.wall_clock_seconds) << " s\n\n";
      out << "| metric | value | criterion | provenance | result |\n";
      out << "|---|---|---|---|---|\n";
      for (const auto& m : report.metrics) {
        std::string criterion = "reported";
        if (m.comparator == "|x-target|<=")
          criterion = "within " + fmt12(m.tolerance) + " of " + fmt12(m.target);
        else if (m.gated)
          criterion = m.comparator + " " + fmt12(m.target);
        out << "| " << m.name << " | " << fmt12(m.value) << " | " << criterion << " | " << m.provenance << " | "
            << (m.gated ? (m.pass ? "PASS" : "FAIL") : "-") << " |\n";
      }
      if (!report.artifacts.empty()) {
        out << "\nArtifacts:\n\n";
        for (const auto& a : report.artifacts) out << "- " << a << '\n';
      }
      break;
    }
  }
  write_text(file, out.str());
  return file.string();
}

UniquenessResult uniqueness_experiment(const UniquenessConfig& c) {
  if (c.paths < 1) throw ConfigError("uniqueness needs at least one path");
  if (!(c.delta > 0.0)) throw DomainError("delta must be positive");
  if (!(c.gap_factor > 0.0)) throw DomainError("gap factor must be positive");
  const auto model = CovarianceModel::fbm(c.hurst);
  const auto sample = sample_fbm_grid(model, c.grid, c.paths, c.seed, c.dim);
  SynthDriftOptions o;
  o.dim = c.dim;
  o.levels = c.levels;
  const auto b = synth_drift(DriftKind::weierstrass, c.kappa, stream_seed(c.seed, 0, "uniqueness-drift"), o);
  const auto sigma = VectorFieldModel::identity(c.dim);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(c.dim, c.start);
  const Eigen::VectorXd x1 = x0 + c.delta * Eigen::VectorXd::Constant(c.dim, 1.0 / std::sqrt(c.dim));

  UniquenessResult r;
  r.config = c;
  r.ratios.assign(c.paths, 0.0);
  parallel_for(c.paths, [&](std::size_t n) {
    const auto path = lift_path(sample, n, c.degree, 1);
    r.ratios[n] = sup_distance(solve_direct(b, sigma, path, x0), solve_direct(b, sigma, path, x1)) / c.delta;
  });
  const auto within = std::count_if(r.ratios.begin(), r.ratios.end(), [&](double v) { return v <= c.gap_factor; });
  r.fraction_within = static_cast<double>(within) / static_cast<double>(c.paths);
  auto sorted = r.ratios;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  r.median_ratio = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  r.max_ratio = sorted.back();
  return r;
}

json to_json(const UniquenessResult& r) {
  const auto& c = r.config;
  return {{"hurst", c.hurst},
          {"kappa", c.kappa},
          {"delta", c.delta},
          {"paths", c.paths},
          {"grid", c.grid},
          {"dim", c.dim},
          {"levels", c.levels},
          {"gap_factor", c.gap_factor},
          {"degree", c.degree},
          {"seed", c.seed},
          {"fraction_within", r.fraction_within},
          {"median_ratio", r.median_ratio},
          {"max_ratio", r.max_ratio},
          {"ratios", r.ratios}};
}

}  // namespace roughflow
