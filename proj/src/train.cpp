#include "qff/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "qff/errors.hpp"
#include "qff/gradients.hpp"
#include "qff/textio.hpp"

namespace qff {

void AdamConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ArgumentError("learning rate must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw ArgumentError("ADAM betas must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) throw ArgumentError("ADAM epsilon must be positive");
  if (max_steps < 0) throw ArgumentError("max_steps must be >= 0");
  if (patience < 1) throw ArgumentError("patience must be >= 1");
}

void SimplexConfig::validate() const {
  if (max_evaluations < 1) throw ArgumentError("max_evaluations must be >= 1");
  if (!(initial_step > 0.0)) throw ArgumentError("initial simplex step must be positive");
}

OptimResult adam_minimize(const ObjectiveWithGrad& fn, std::vector<double> x, const AdamConfig& cfg) {
  cfg.validate();
  const std::size_t d = x.size();
  std::vector<double> m(d, 0.0), v(d, 0.0), g(d, 0.0);
  OptimResult r;
  double b1t = 1.0, b2t = 1.0;
  for (int t = 0; t < cfg.max_steps; ++t) {
    std::fill(g.begin(), g.end(), 0.0);
    const double loss = fn(x, g);
    ++r.evaluations;
    if (!std::isfinite(loss)) {
      throw NumericalError("non-finite loss at ADAM step " + std::to_string(t));
    }
    for (std::size_t i = 0; i < d; ++i) {
      if (!std::isfinite(g[i])) {
        throw NumericalError("non-finite gradient component " + std::to_string(i) + " at ADAM step " +
                             std::to_string(t));
      }
    }
    r.trajectory.push_back(loss);
    if (t >= cfg.patience && r.epochs_to_convergence < 0) {
      const double past = r.trajectory[t - cfg.patience];
      const double rel = (past - loss) / std::max(std::abs(past), std::numeric_limits<double>::min());
      if (rel < cfg.tolerance) {
        r.epochs_to_convergence = t;
        r.converged = true;
        if (cfg.stop_on_convergence) break;
      }
    }
    b1t *= cfg.beta1;
    b2t *= cfg.beta2;
    for (std::size_t i = 0; i < d; ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mh = m[i] / (1.0 - b1t);
      const double vh = v[i] / (1.0 - b2t);
      x[i] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon);
    }
    ++r.iterations;
  }
  std::fill(g.begin(), g.end(), 0.0);
  r.value = fn(x, g);
  ++r.evaluations;
  r.x = std::move(x);
  return r;
}

OptimResult simplex_minimize(const Objective& fn, std::vector<double> x0, const SimplexConfig& cfg) {
  cfg.validate();
  const std::size_t n = x0.size();
  OptimResult r;
  auto eval = [&](const std::vector<double>& x) {
    const double f = fn(x);
    ++r.evaluations;
    if (std::isnan(f)) throw NumericalError("objective returned NaN after " + std::to_string(r.evaluations) + " evaluations");
    return f;
  };
  if (n == 0) {
    r.value = eval(x0);
    r.x = std::move(x0);
    r.converged = true;
    return r;
  }
  // Dimension-adaptive coefficients keep the simplex from collapsing for large n.
  const double dn = static_cast<double>(n);
  const double alpha = 1.0;
  const double gamma = 1.0 + 2.0 / dn;
  const double rho = 0.75 - 1.0 / (2.0 * dn);
  const double sigma = 1.0 - 1.0 / dn;

  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> fv(n + 1);
  fv[0] = eval(pts[0]);
  for (std::size_t i = 0; i < n && r.evaluations < cfg.max_evaluations; ++i) {
    pts[i + 1][i] += cfg.initial_step;
    fv[i + 1] = eval(pts[i + 1]);
  }
  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  auto best_so_far = [&] { return *std::min_element(fv.begin(), fv.end()); };
  while (r.evaluations < cfg.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
    r.trajectory.push_back(fv[best]);
    ++r.iterations;

    double size = 0.0;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t k = 0; k < n; ++k) size = std::max(size, std::abs(pts[i][k] - pts[best][k]));
    if (fv[worst] - fv[best] <= cfg.tolerance && size <= cfg.tolerance) {
      r.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / dn;
    }
    for (std::size_t k = 0; k < n; ++k) xr[k] = centroid[k] + alpha * (centroid[k] - pts[worst][k]);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      if (r.evaluations >= cfg.max_evaluations) {
        pts[worst] = xr, fv[worst] = fr;
        break;
      }
      for (std::size_t k = 0; k < n; ++k) xe[k] = centroid[k] + gamma * (xr[k] - centroid[k]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe, fv[worst] = fe;
      } else {
        pts[worst] = xr, fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      pts[worst] = xr, fv[worst] = fr;
      continue;
    }
    if (r.evaluations >= cfg.max_evaluations) break;
    const bool outside = fr < fv[worst];
    for (std::size_t k = 0; k < n; ++k) {
      xc[k] = outside ? centroid[k] + rho * (xr[k] - centroid[k]) : centroid[k] + rho * (pts[worst][k] - centroid[k]);
    }
    const double fc = eval(xc);
    if (fc < std::min(fr, fv[worst])) {
      pts[worst] = xc, fv[worst] = fc;
      continue;
    }
    // Shrink toward the best vertex.
    for (std::size_t i = 0; i <= n && r.evaluations < cfg.max_evaluations; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < n; ++k) pts[i][k] = pts[best][k] + sigma * (pts[i][k] - pts[best][k]);
      fv[i] = eval(pts[i]);
    }
  }
  const auto it = std::min_element(fv.begin(), fv.end());
  r.value = *it;
  r.x = pts[static_cast<std::size_t>(it - fv.begin())];
  if (r.trajectory.empty() || r.trajectory.back() != best_so_far()) r.trajectory.push_back(best_so_far());
  r.budget_exhausted = !r.converged;
  return r;
}

double QnnRegressor::value(std::span<const double> theta, std::span<const double> y) const {
  return eval_qnn(*tmpl_, y, theta);
}
std::vector<double> QnnRegressor::param_gradient(std::span<const double> theta, std::span<const double> y) const {
  return grad_params(*tmpl_, y, theta);
}
std::vector<double> QnnRegressor::input_gradient(std::span<const double> theta, std::span<const double> y) const {
  return grad_inputs(*tmpl_, y, theta);
}
std::vector<std::vector<double>> QnnRegressor::mixed_hessian(std::span<const double> theta,
                                                             std::span<const double> y) const {
  return qff::mixed_hessian(*tmpl_, y, theta);
}

PreparedSet prepare_set(const DescriptorPipeline& pipeline, const LabelScaler& labels, const Dataset& data,
                        bool with_jacobians) {
  data.validate();
  PreparedSet set;
  set.cartesian_dim = 3 * data.num_atoms();
  const bool forces = data.has_forces();
  for (const auto& s : data.samples) {
    const MoleculeGeometry g{data.elements, s.cartesian};
    auto out = pipeline.evaluate(g, with_jacobians);
    set.features.push_back(std::move(out.features));
    if (with_jacobians) set.jacobians.push_back(std::move(out.jacobian));
    set.energy_targets.push_back(labels.to_scaled(s.energy));
    if (forces) {
      std::vector<double> f(*s.forces);
      for (double& v : f) v /= labels.scale;
      set.force_targets.push_back(std::move(f));
    }
  }
  return set;
}

namespace {

void require_forces(const PreparedSet& set, const LossSpec& spec) {
  if (spec.chi < 0.0 || !std::isfinite(spec.chi)) throw ArgumentError("chi must be finite and >= 0");
  if (spec.chi > 0.0 && (!set.has_forces() || set.jacobians.size() != set.size())) {
    throw DataError("force labels and pipeline Jacobians are required when chi > 0");
  }
}

// Predicted scaled forces -J^T grad_y f.
Eigen::VectorXd scaled_forces(const PipelineJacobian& jac, const std::vector<double>& gy) {
  const Eigen::Map<const Eigen::VectorXd> g(gy.data(), static_cast<Eigen::Index>(gy.size()));
  return -(jac.transpose() * g);
}

}  // namespace

LossBreakdown regression_loss(const DifferentiableRegressor& model, std::span<const double> theta,
                              const PreparedSet& set, const LossSpec& spec) {
  require_forces(set, spec);
  if (set.size() == 0) throw DataError("loss over an empty set");
  LossBreakdown l;
  for (std::size_t a = 0; a < set.size(); ++a) {
    const double r = model.value(theta, set.features[a]) - set.energy_targets[a];
    l.energy_mse += r * r;
    if (spec.chi > 0.0) {
      const Eigen::VectorXd p = scaled_forces(set.jacobians[a], model.input_gradient(theta, set.features[a]));
      for (int c = 0; c < set.cartesian_dim; ++c) {
        const double e = p[c] - set.force_targets[a][c];
        l.force_mse += e * e;
      }
    }
  }
  l.energy_mse /= static_cast<double>(set.size());
  l.force_mse /= static_cast<double>(set.size()) * set.cartesian_dim;
  l.total = l.energy_mse + spec.chi * l.force_mse;
  return l;
}

double regression_loss_gradient(const DifferentiableRegressor& model, std::span<const double> theta,
                                const PreparedSet& set, const LossSpec& spec, std::span<double> grad) {
  require_forces(set, spec);
  if (set.size() == 0) throw DataError("loss over an empty set");
  const int d = model.num_params();
  std::fill(grad.begin(), grad.end(), 0.0);
  const double na = static_cast<double>(set.size());
  const double nf = na * set.cartesian_dim;
  double e_mse = 0.0, f_mse = 0.0;
  for (std::size_t a = 0; a < set.size(); ++a) {
    const auto& y = set.features[a];
    const double r = model.value(theta, y) - set.energy_targets[a];
    e_mse += r * r;
    const auto gp = model.param_gradient(theta, y);
    for (int p = 0; p < d; ++p) grad[p] += 2.0 * r * gp[p] / na;
    if (spec.chi > 0.0) {
      const auto& jac = set.jacobians[a];
      const Eigen::VectorXd pred = scaled_forces(jac, model.input_gradient(theta, y));
      Eigen::VectorXd resid(set.cartesian_dim);
      for (int c = 0; c < set.cartesian_dim; ++c) resid[c] = pred[c] - set.force_targets[a][c];
      f_mse += resid.squaredNorm();
      // d pred / d theta_mu = -J^T H[mu, :]
      const Eigen::VectorXd jr = jac * resid;
      const auto h = model.mixed_hessian(theta, y);
      for (int p = 0; p < d; ++p) {
        double dot = 0.0;
        for (int j = 0; j < jr.size(); ++j) dot += h[p][j] * jr[j];
        grad[p] += spec.chi * (-2.0 * dot) / nf;
      }
    }
  }
  return e_mse / na + spec.chi * f_mse / nf;
}

RmseReport regression_rmse(const DifferentiableRegressor& model, std::span<const double> theta,
                           const PreparedSet& set, const LabelScaler& labels, bool with_forces) {
  if (with_forces && (!set.has_forces() || set.jacobians.size() != set.size())) {
    throw DataError("force evaluation requested but the data set has no force labels");
  }
  RmseReport r;
  r.samples = set.size();
  double se = 0.0, sf = 0.0;
  for (std::size_t a = 0; a < set.size(); ++a) {
    const double e = model.value(theta, set.features[a]) - set.energy_targets[a];
    se += e * e;
    if (with_forces) {
      const Eigen::VectorXd p = scaled_forces(set.jacobians[a], model.input_gradient(theta, set.features[a]));
      for (int c = 0; c < set.cartesian_dim; ++c) {
        const double df = p[c] - set.force_targets[a][c];
        sf += df * df;
      }
    }
  }
  r.energy_scaled = std::sqrt(se / static_cast<double>(set.size()));
  r.energy = r.energy_scaled * labels.scale;
  if (with_forces) {
    r.force_scaled = std::sqrt(sf / (static_cast<double>(set.size()) * set.cartesian_dim));
    r.force = r.force_scaled * labels.scale;
  } else {
    r.force = r.force_scaled = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

std::string TrainReport::to_text() const {
  std::ostringstream os;
  auto num = [](double v) { return text::format_double(v); };
  os << "report.optimizer = " << optimizer << '\n';
  for (const auto& [k, v] : settings) os << "report.setting." << k << " = " << v << '\n';
  os << "report.epochs = " << epochs << '\n';
  os << "report.epochs_to_convergence = " << epochs_to_convergence << '\n';
  os << "report.converged = " << (converged ? "true" : "false") << '\n';
  os << "report.budget_exhausted = " << (budget_exhausted ? "true" : "false") << '\n';
  os << "report.function_evaluations = " << function_evaluations << '\n';
  os << "report.final_loss = " << num(final_loss) << '\n';
  os << "report.train.rmse_energy_ev = " << num(train.energy) << '\n';
  os << "report.train.rmse_force_ev_per_a = " << num(train.force) << '\n';
  os << "report.train.rmse_energy_scaled = " << num(train.energy_scaled) << '\n';
  os << "report.train.rmse_force_scaled = " << num(train.force_scaled) << '\n';
  if (validation) {
    os << "report.validation.samples = " << validation->samples << '\n';
    os << "report.validation.rmse_energy_ev = " << num(validation->energy) << '\n';
    os << "report.validation.rmse_force_ev_per_a = " << num(validation->force) << '\n';
    os << "report.validation.rmse_energy_scaled = " << num(validation->energy_scaled) << '\n';
    os << "report.validation.rmse_force_scaled = " << num(validation->force_scaled) << '\n';
  }
  os << "report.wall_seconds = " << num(wall_seconds) << '\n';
  os << "report.circuit_evaluations = " << circuit_evaluations << '\n';
  os << "report.param_shift_calls = " << param_shift_calls << '\n';
  os << "report.hessian_calls = " << hessian_calls << '\n';
  return os.str();
}

std::string TrainReport::loss_curve_csv() const {
  std::ostringstream os;
  os << "step,loss\n";
  for (std::size_t i = 0; i < loss.size(); ++i) os << i << ',' << text::format_double(loss[i]) << '\n';
  return os.str();
}

std::vector<double> zero_init(const QnnTemplate& tmpl) {
  return std::vector<double>(static_cast<std::size_t>(tmpl.num_params()), 0.0);
}

double loss_chi(const QffModel& model, const Dataset& data, const LossSpec& spec) {
  model.validate();
  const auto set = prepare_set(model.pipeline, model.labels, data, spec.chi > 0.0);
  return regression_loss(QnnRegressor(model.tmpl), model.theta, set, spec).total;
}

RmseReport evaluate_rmse(const QffModel& model, const Dataset& data, bool with_forces) {
  model.validate();
  if (with_forces && !data.has_forces()) {
    throw DataError("force evaluation requested but the data set has no force labels");
  }
  const auto set = prepare_set(model.pipeline, model.labels, data, with_forces);
  return regression_rmse(QnnRegressor(model.tmpl), model.theta, set, model.labels, with_forces);
}

QffModel initialize_model(const QnnTemplate& tmpl, DescriptorPipeline pipeline, const Dataset& train,
                          double label_headroom) {
  train.validate();
  const auto geoms = train.geometries();
  pipeline.fit(geoms);
  QffModel m;
  m.tmpl = tmpl;
  m.pipeline = std::move(pipeline);
  m.theta = zero_init(tmpl);
  const auto e = train.energies();
  m.labels = LabelScaler::fit(e, label_headroom);
  m.validate();
  return m;
}

namespace {

using Clock = std::chrono::steady_clock;

struct CounterSnapshot {
  std::uint64_t runs, params, hessians;
  static CounterSnapshot now() {
    return {eval_stats().circuit_runs.load(), eval_stats().param_shift_calls.load(),
            eval_stats().hessian_calls.load()};
  }
};

// Optimization counters are taken before the reporting pass.
void finish_report(TrainReport& rep, const QffModel& model, const Dataset& train, const Dataset* validation,
                   Clock::time_point start, const CounterSnapshot& before) {
  const auto after = CounterSnapshot::now();
  rep.circuit_evaluations = after.runs - before.runs;
  rep.param_shift_calls = after.params - before.params;
  rep.hessian_calls = after.hessians - before.hessians;
  const bool tf = train.has_forces();
  rep.train = evaluate_rmse(model, train, tf);
  if (validation) rep.validation = evaluate_rmse(model, *validation, validation->has_forces());
  rep.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::pair<QffModel, TrainReport> adam_fit(QffModel model, const Dataset& train, const LossSpec& spec,
                                          const AdamConfig& cfg, const Dataset* validation) {
  model.validate();
  const auto start = Clock::now();
  const auto before = CounterSnapshot::now();
  const auto set = prepare_set(model.pipeline, model.labels, train, spec.chi > 0.0);
  const QnnRegressor reg(model.tmpl);
  auto fn = [&](std::span<const double> th, std::span<double> g) {
    return regression_loss_gradient(reg, th, set, spec, g);
  };
  auto res = adam_minimize(fn, model.theta, cfg);
  model.theta = res.x;

  TrainReport rep;
  rep.optimizer = "adam";
  rep.settings = {{"learning_rate", text::format_double(cfg.learning_rate)},
                  {"beta1", text::format_double(cfg.beta1)},
                  {"beta2", text::format_double(cfg.beta2)},
                  {"epsilon", text::format_double(cfg.epsilon)},
                  {"max_steps", std::to_string(cfg.max_steps)},
                  {"tolerance", text::format_double(cfg.tolerance)},
                  {"patience", std::to_string(cfg.patience)},
                  {"seed", std::to_string(cfg.seed)},
                  {"chi", text::format_double(spec.chi)}};
  rep.loss = res.trajectory;
  rep.epochs = res.iterations;
  rep.epochs_to_convergence = res.epochs_to_convergence;
  rep.converged = res.converged;
  rep.function_evaluations = res.evaluations;
  rep.final_loss = res.value;
  finish_report(rep, model, train, validation, start, before);
  return {std::move(model), std::move(rep)};
}

std::pair<QffModel, TrainReport> gradient_free_fit(QffModel model, const Dataset& train, const LossSpec& spec,
                                                   const SimplexConfig& cfg, const Dataset* validation) {
  model.validate();
  const auto start = Clock::now();
  const auto before = CounterSnapshot::now();
  if (spec.chi > 0.0 && !train.has_forces()) throw DataError("force labels are required when chi > 0");
  const auto set = prepare_set(model.pipeline, model.labels, train, spec.chi > 0.0);

  // Only forward evaluations and input gradients: no parameter shifts, no
  // mixed Hessians.
  const auto& tmpl = model.tmpl;
  auto loss = [&](std::span<const double> th) {
    double e_mse = 0.0, f_mse = 0.0;
    for (std::size_t a = 0; a < set.size(); ++a) {
      const auto& y = set.features[a];
      const double r = eval_qnn(tmpl, y, th) - set.energy_targets[a];
      e_mse += r * r;
      if (spec.chi > 0.0) {
        const Eigen::VectorXd p = scaled_forces(set.jacobians[a], grad_inputs(tmpl, y, th));
        for (int c = 0; c < set.cartesian_dim; ++c) {
          const double df = p[c] - set.force_targets[a][c];
          f_mse += df * df;
        }
      }
    }
    return e_mse / static_cast<double>(set.size()) +
           spec.chi * f_mse / (static_cast<double>(set.size()) * set.cartesian_dim);
  };
  auto res = simplex_minimize(loss, model.theta, cfg);
  model.theta = res.x;

  TrainReport rep;
  rep.optimizer = "simplex";
  rep.settings = {{"max_evaluations", std::to_string(cfg.max_evaluations)},
                  {"initial_step", text::format_double(cfg.initial_step)},
                  {"tolerance", text::format_double(cfg.tolerance)},
                  {"seed", std::to_string(cfg.seed)},
                  {"chi", text::format_double(spec.chi)}};
  rep.loss = res.trajectory;
  rep.epochs = res.iterations;
  rep.epochs_to_convergence = res.converged ? res.iterations : -1;
  rep.converged = res.converged;
  rep.budget_exhausted = res.budget_exhausted;
  rep.function_evaluations = res.evaluations;
  rep.final_loss = res.value;
  finish_report(rep, model, train, validation, start, before);
  return {std::move(model), std::move(rep)};
}

}  // namespace qff
