#include "fapc/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fapc/linops.hpp"
#include "fapc/semilinear.hpp"
#include "fapc/spectral.hpp"
#include "fapc/steering.hpp"

namespace fapc {

const char* const kReportHeader =
    "scenario,epsilon,terminal_error,projection_residual,predicted_error,"
    "control_energy,delta,gamma_hat,iterations,converged,wall_time_ms";

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    quoted += c;
    if (c == '"') quoted += '"';
  }
  quoted += '"';
  return quoted;
}

struct CsvRow {
  std::string scenario;
  double epsilon = 0.0;
  double terminal_error = 0.0;
  double projection_residual = 0.0;
  double predicted_error = 0.0;
  double control_energy = 0.0;
  double delta = kInf;
  double gamma_hat = 0.0;
  long iterations = 1;
  bool converged = true;
};

// Rows sort by (scenario, epsilon ascending); the wall-time column is pinned
// to zero so repeated runs stay byte-identical. Real timings live in the
// report text.
std::string render_csv(std::vector<CsvRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const CsvRow& a, const CsvRow& b) {
    if (a.scenario != b.scenario) return a.scenario < b.scenario;
    return a.epsilon < b.epsilon;
  });
  std::string out = std::string(kReportHeader) + "\r\n";
  for (const CsvRow& row : rows) {
    out += csv_field(row.scenario);
    out += ',' + fmt(row.epsilon);
    out += ',' + fmt(row.terminal_error);
    out += ',' + fmt(row.projection_residual);
    out += ',' + fmt(row.predicted_error);
    out += ',' + fmt(row.control_energy);
    out += ',' + fmt(row.delta);
    out += ',' + fmt(row.gamma_hat);
    out += ',' + std::to_string(row.iterations);
    out += row.converged ? ",true" : ",false";
    out += ",0\r\n";
  }
  return out;
}

struct Instruments {
  HeatModel model;
  ControlOperator control;
  Subspace projection;
  Gramian gram;
  Vector y0;
  Vector yf;
};

Instruments make_instruments(const RunConfig& config) {
  Instruments ins;
  ins.model = HeatModel{config.n_modes};
  ins.control = config.control_kind == "distributed"
                    ? ControlOperator::distributed(config.control_lo, config.control_hi,
                                                   config.n_modes)
                    : ControlOperator::lumped(config.control_lo, config.control_hi,
                                              config.n_modes);
  ins.projection = config.basis_file.empty()
                       ? Subspace::leading_modes(config.n_modes, config.m_modes)
                       : load_basis_file(config.basis_file, config.n_modes);
  if (config.gramian_file.empty()) {
    ins.gram = gramian_closed_form(ins.model, ins.control, config.horizon);
  } else {
    ins.gram.matrix = load_matrix_file(config.gramian_file, config.n_modes);
    ins.gram.horizon = config.horizon;
  }
  ins.y0 = resolve_state(config.y0, config.n_modes, config.seed, "y0");
  ins.yf = resolve_state(config.yf, config.n_modes, config.seed, "yf");
  return ins;
}

double wall_ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

namespace {

struct CheckRow {
  std::string name;
  bool per_eps = false;
  double eps = 0.0;
  double value = 0.0;
  std::string limit_text;
  bool pass = false;
  bool vacuous = false;
  std::string note;
};

CsvRow check_to_csv(const RunConfig& config, const CheckRow& check, double delta_value) {
  CsvRow row;
  row.scenario = config.scenario + ":" + check.name + (check.vacuous ? ":vacuous" : "");
  row.epsilon = check.per_eps ? check.eps : 0.0;
  row.terminal_error = check.value;
  row.delta = delta_value;
  row.converged = check.pass;
  return row;
}

}  // namespace

RunOutput run_verify(const RunConfig& config) {
  const Instruments ins = make_instruments(config);
  const Matrix& gamma = ins.gram.matrix;
  const int m = ins.projection.dim();

  // deterministic probe vector for the solve-based checks
  StateSpec probe_spec;
  probe_spec.is_preset = true;
  probe_spec.preset = "random";
  const Vector probe = resolve_state(probe_spec, config.n_modes, config.seed, "verify-probe");

  std::vector<CheckRow> checks;

  {
    CheckRow c;
    c.name = "gramian-symmetry";
    const double scale = std::max(gamma.cwiseAbs().maxCoeff(), 1e-300);
    c.value = (gamma - gamma.transpose()).cwiseAbs().maxCoeff() / scale;
    c.limit_text = "<= 1e-12 relative";
    c.pass = c.value <= 1e-12;
    checks.push_back(c);
  }

  const Matrix symmetrized = 0.5 * (gamma + gamma.transpose());
  double delta_value = kInf;
  if (m > 0) delta_value = delta_coercivity(symmetrized, ins.projection);

  {
    CheckRow c;
    c.name = "gramian-psd";
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized, Eigen::EigenvaluesOnly);
    const double min_eig = eig.eigenvalues().minCoeff();
    const double scale = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
    c.value = min_eig;
    c.limit_text = ">= -1e-10 of the spectral radius";
    c.pass = min_eig >= -1e-10 * scale;
    checks.push_back(c);
  }

  for (double eps : config.epsilons) {
    {
      CheckRow c;
      c.name = "contraction";
      c.per_eps = true;
      c.eps = eps;
      c.limit_text = "< 1";
      try {
        c.value = contraction_norm(symmetrized, eps, ins.projection);
        c.pass = c.value < 1.0;
      } catch (const std::exception& err) {
        c.value = std::numeric_limits<double>::quiet_NaN();
        c.pass = false;
        c.note = err.what();
      }
      checks.push_back(c);
    }
    {
      CheckRow c;
      c.name = "factorization";
      c.per_eps = true;
      c.eps = eps;
      c.limit_text = "<= 1e-9";
      try {
        c.value = factorization_residual(symmetrized, eps, ins.projection, probe);
        c.pass = c.value <= 1e-9;
      } catch (const std::exception& err) {
        c.value = std::numeric_limits<double>::quiet_NaN();
        c.pass = false;
        c.note = err.what();
      }
      checks.push_back(c);
    }
    {
      CheckRow c;
      c.name = "coercivity-bound";
      c.per_eps = true;
      c.eps = eps;
      if (m == 0) {
        c.vacuous = true;
        c.pass = true;
        c.limit_text = "vacuous (no projection modes)";
      } else {
        c.limit_text = "|x| min(eps, delta) / |h| <= 1 + 1e-8";
        try {
          const Vector x = resolvent_like_apply(symmetrized, eps, ins.projection, probe);
          c.value = x.norm() * std::min(eps, delta_value) / probe.norm();
          c.pass = c.value <= 1.0 + 1e-8;
        } catch (const std::exception& err) {
          c.value = std::numeric_limits<double>::quiet_NaN();
          c.pass = false;
          c.note = err.what();
        }
      }
      checks.push_back(c);
    }
  }

  {
    CheckRow c;
    c.name = "vanishing-monotone";
    c.limit_text = "max increase <= 1e-12";
    try {
      const auto rows = vanishing_sweep(symmetrized, ins.projection, config.epsilons, probe);
      double worst = 0.0;
      for (size_t i = 1; i < rows.size(); ++i) {
        worst = std::max(worst, rows[i].contraction - rows[i - 1].contraction);
        worst = std::max(worst, rows[i].resolvent_norm - rows[i - 1].resolvent_norm);
        worst = std::max(worst, rows[i].resolvent_like_norm - rows[i - 1].resolvent_like_norm);
      }
      c.value = worst;
      c.pass = worst <= 1e-12;
    } catch (const std::exception& err) {
      c.value = std::numeric_limits<double>::quiet_NaN();
      c.pass = false;
      c.note = err.what();
    }
    checks.push_back(c);
  }

  RunOutput out;
  std::vector<CsvRow> csv_rows;
  std::ostringstream report;
  report << "verification of scenario " << config.scenario << " (N=" << config.n_modes
         << ", horizon=" << config.horizon << ", m=" << m << ")\n";
  for (const CheckRow& c : checks) {
    csv_rows.push_back(check_to_csv(config, c, delta_value));
    report << "check " << c.name;
    if (c.per_eps) report << " epsilon=" << fmt(c.eps);
    if (c.vacuous) {
      report << ": vacuous\n";
      continue;
    }
    report << (c.pass ? ": pass" : ": FAIL") << " (value " << fmt(c.value) << ", limit "
           << c.limit_text << ")";
    if (!c.note.empty()) report << " [" << c.note << "]";
    report << "\n";
    if (!c.pass && out.failure.empty()) out.failure = c.name;
  }
  report << (out.failure.empty() ? "verification: all checks passed"
                                 : "verification failed: " + out.failure)
         << "\n";

  out.exit_code = out.failure.empty() ? kExitOk : kExitFailure;
  out.csv = render_csv(std::move(csv_rows));
  out.report = report.str();
  return out;
}

RunOutput run_steer(const RunConfig& config) {
  const Instruments ins = make_instruments(config);
  const double delta_value =
      ins.projection.dim() > 0 ? delta_coercivity(ins.gram.matrix, ins.projection) : kInf;

  std::vector<CsvRow> rows;
  std::ostringstream report;
  report << "linear steering, scenario " << config.scenario << " (N=" << config.n_modes
         << ", horizon=" << config.horizon << ", m=" << ins.projection.dim() << ")\n";

  for (double eps : config.epsilons) {
    const auto start = std::chrono::steady_clock::now();
    SteeringProblem p{ins.model, ins.control, ins.gram, config.horizon,
                      eps,       ins.projection, ins.y0, ins.yf};
    const SteeringResult res = steer(p, config.steps + 1);
    const double gamma_hat = contraction_norm(ins.gram.matrix, eps, ins.projection);
    const double wall = wall_ms_since(start);

    CsvRow row;
    row.scenario = config.scenario;
    row.epsilon = eps;
    row.terminal_error = res.error_norm;
    row.projection_residual = res.projection_residual;
    row.predicted_error = res.predicted.norm();
    row.control_energy = res.control_energy;
    row.delta = delta_value;
    row.gamma_hat = gamma_hat;
    row.iterations = 1;
    row.converged = true;
    rows.push_back(row);

    report << "epsilon " << fmt(eps) << ": terminal_error=" << fmt(res.error_norm)
           << " projection_residual=" << fmt(res.projection_residual)
           << " energy=" << fmt(res.control_energy) << " wall=" << wall << "ms\n";
  }

  RunOutput out;
  out.exit_code = kExitOk;
  out.csv = render_csv(std::move(rows));
  out.report = report.str();
  return out;
}

RunOutput run_semilinear(const RunConfig& config, int threads) {
  const Instruments ins = make_instruments(config);

  SemilinearProblem tmpl;
  tmpl.base = SteeringProblem{ins.model,       ins.control, ins.gram, config.horizon,
                              config.epsilons.front(), ins.projection, ins.y0, ins.yf};
  tmpl.nonlinearity = make_nonlinearity(config.f_name, config.g_name, config.bound);
  tmpl.colloc = CollocationMap::make(config.n_modes);
  tmpl.grid = TimeGrid{config.horizon, config.steps};
  tmpl.iteration = IterationParams{config.tol, config.max_iter, config.relaxation};

  const auto start = std::chrono::steady_clock::now();
  const std::vector<EpsStudyRow> study = epsilon_study(tmpl, config.epsilons, threads);
  const double wall = wall_ms_since(start);

  std::vector<CsvRow> rows;
  std::ostringstream report;
  report << "semilinear steering, scenario " << config.scenario << " (N=" << config.n_modes
         << ", f=" << config.f_name << ", g=" << config.g_name << ", L=" << config.bound
         << ", steps=" << config.steps << ")\n";

  bool all_converged = true;
  for (const EpsStudyRow& r : study) {
    CsvRow row;
    row.scenario = config.scenario;
    row.epsilon = r.eps;
    row.terminal_error = r.terminal_error_norm;
    row.projection_residual = r.projection_residual;
    row.predicted_error = r.predicted_error_norm;
    row.control_energy = r.control_energy;
    row.delta = r.delta;
    row.gamma_hat = r.gamma_hat;
    row.iterations = r.iterations;
    row.converged = r.converged;
    rows.push_back(row);
    all_converged = all_converged && r.converged;

    report << "epsilon " << fmt(r.eps) << ": "
           << (r.converged ? "converged" : "did not converge") << " after " << r.iterations
           << " iterations, terminal_error=" << fmt(r.terminal_error_norm)
           << " projection_residual=" << fmt(r.projection_residual) << "\n";
    for (size_t i = 0; i < r.residual_history.size(); ++i) {
      report << "  iter " << (i + 1) << " residual " << fmt(r.residual_history[i]) << "\n";
    }
  }
  report << "total wall " << wall << "ms over " << study.size() << " instances, threads="
         << threads << "\n";

  RunOutput out;
  out.exit_code = all_converged ? kExitOk : kExitPartial;
  if (!all_converged) out.failure = "non-converged instances";
  out.csv = render_csv(std::move(rows));
  out.report = report.str();
  return out;
}

RunOutput run_sweep(const RunConfig& config) {
  const Instruments ins = make_instruments(config);
  const double delta_value =
      ins.projection.dim() > 0 ? delta_coercivity(ins.gram.matrix, ins.projection) : kInf;

  Vector h = ins.yf - semigroup_apply(ins.model, config.horizon, ins.y0);
  if (h.norm() == 0.0) {
    StateSpec probe_spec;
    probe_spec.is_preset = true;
    probe_spec.preset = "random";
    h = resolve_state(probe_spec, config.n_modes, config.seed, "sweep-probe");
  }

  const auto sweep = vanishing_sweep(ins.gram.matrix, ins.projection, config.epsilons, h);

  std::vector<CsvRow> rows;
  std::ostringstream report;
  report << "vanishing sweep, scenario " << config.scenario << " (N=" << config.n_modes
         << ", m=" << ins.projection.dim() << ")\n";
  for (const SweepRow& r : sweep) {
    CsvRow row;
    row.scenario = config.scenario;
    row.epsilon = r.eps;
    row.terminal_error = r.resolvent_norm;
    row.predicted_error = r.resolvent_like_norm;
    row.delta = delta_value;
    row.gamma_hat = r.contraction;
    rows.push_back(row);
    report << "epsilon " << fmt(r.eps) << ": contraction=" << fmt(r.contraction)
           << " resolvent_norm=" << fmt(r.resolvent_norm)
           << " resolvent_like_norm=" << fmt(r.resolvent_like_norm) << "\n";
  }

  RunOutput out;
  out.exit_code = kExitOk;
  out.csv = render_csv(std::move(rows));
  out.report = report.str();
  return out;
}

}  // namespace fapc
