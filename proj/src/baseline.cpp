#include "qff/baseline.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "qff/errors.hpp"
#include "qff/textio.hpp"

namespace qff {

int MlpSpec::num_params() const {
  int n = 0;
  for (std::size_t l = 1; l < widths.size(); ++l) n += widths[l - 1] * widths[l] + widths[l];
  return n;
}

void MlpSpec::validate() const {
  if (widths.size() < 3) throw ArgumentError("MLP needs an input, at least one hidden layer and an output");
  if (widths.back() != 1) throw ArgumentError("MLP output width must be 1");
  for (int w : widths)
    if (w < 1) throw ArgumentError("MLP layer widths must be positive");
}

std::string MlpSpec::to_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < widths.size(); ++i) s += (i ? "," : "") + std::to_string(widths[i]);
  return s + "]";
}

MlpSpec MlpSpec::parse(std::string_view s) {
  auto t = text::trim(s);
  if (!t.empty() && t.front() == '[') t.remove_prefix(1);
  if (!t.empty() && t.back() == ']') t.remove_suffix(1);
  MlpSpec spec;
  spec.widths = text::parse_ints(t, ',');
  spec.validate();
  return spec;
}

MlpModel mlp_init_xavier(const MlpSpec& spec) {
  spec.validate();
  MlpModel m{spec, {}};
  m.params.reserve(spec.num_params());
  std::mt19937_64 rng(spec.seed);
  for (std::size_t l = 1; l < spec.widths.size(); ++l) {
    const int in = spec.widths[l - 1], out = spec.widths[l];
    const double bound = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (int i = 0; i < in * out; ++i) m.params.push_back(u(rng));
    for (int i = 0; i < out; ++i) m.params.push_back(0.0);
  }
  return m;
}

namespace {

// Minimal forward-mode dual number for exact mixed derivatives.
struct Dual {
  double v = 0.0;
  double d = 0.0;
  Dual() = default;
  Dual(double value, double deriv = 0.0) : v(value), d(deriv) {}
};
inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual& operator+=(Dual& a, Dual b) { return a = a + b; }
inline Dual tanh_of(Dual a) {
  const double t = std::tanh(a.v);
  return {t, (1.0 - t * t) * a.d};
}
inline double tanh_of(double a) { return std::tanh(a); }

template <class T>
struct Backprop {
  T value{};
  std::vector<T> d_params;
  std::vector<T> d_inputs;
};

template <class T>
Backprop<T> backprop(const MlpSpec& spec, std::span<const double> params, std::span<const T> x, bool grads) {
  const auto& w = spec.widths;
  const std::size_t layers = w.size() - 1;
  if (static_cast<int>(x.size()) != w.front()) {
    throw ArgumentError("MLP input has width " + std::to_string(x.size()) + ", expected " + std::to_string(w.front()));
  }
  if (static_cast<int>(params.size()) != spec.num_params()) throw ArgumentError("MLP parameter count mismatch");
  std::vector<std::vector<T>> act(layers + 1);
  std::vector<std::size_t> offset(layers);
  act[0].assign(x.begin(), x.end());
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offset[l] = off;
    const int in = w[l], out = w[l + 1];
    const double* W = params.data() + off;
    const double* b = W + in * out;
    act[l + 1].assign(out, T{});
    for (int o = 0; o < out; ++o) {
      T z = T(b[o]);
      for (int i = 0; i < in; ++i) z += T(W[o * in + i]) * act[l][i];
      act[l + 1][o] = (l + 1 < layers) ? tanh_of(z) : z;
    }
    off += in * out + out;
  }
  Backprop<T> r;
  r.value = act[layers][0];
  if (!grads) return r;
  r.d_params.assign(params.size(), T{});
  std::vector<T> delta{T(1.0)};
  for (std::size_t l = layers; l-- > 0;) {
    const int in = w[l], out = w[l + 1];
    const double* W = params.data() + offset[l];
    T* dW = r.d_params.data() + offset[l];
    T* db = dW + in * out;
    std::vector<T> prev(in, T{});
    for (int o = 0; o < out; ++o) {
      db[o] = delta[o];
      for (int i = 0; i < in; ++i) {
        dW[o * in + i] = delta[o] * act[l][i];
        prev[i] += T(W[o * in + i]) * delta[o];
      }
    }
    if (l > 0) {
      for (int i = 0; i < in; ++i) prev[i] = prev[i] * (T(1.0) - act[l][i] * act[l][i]);
    }
    delta = std::move(prev);
  }
  r.d_inputs = std::move(delta);
  return r;
}

}  // namespace

double mlp_forward(const MlpModel& m, std::span<const double> x) {
  return backprop<double>(m.spec, m.params, x, false).value;
}

MlpGradients mlp_backward(const MlpModel& m, std::span<const double> x) {
  auto r = backprop<double>(m.spec, m.params, x, true);
  return {r.value, std::move(r.d_params), std::move(r.d_inputs)};
}

namespace {

// d/d eps of grad_theta f(x + eps v).
std::vector<double> directional_param_gradient(const MlpSpec& spec, std::span<const double> params,
                                               std::span<const double> x, std::span<const double> v) {
  std::vector<Dual> xd(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xd[i] = Dual(x[i], v[i]);
  const auto r = backprop<Dual>(spec, params, std::span<const Dual>(xd), true);
  std::vector<double> out(r.d_params.size());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = r.d_params[p].d;
  return out;
}

}  // namespace

std::vector<std::vector<double>> mlp_mixed_hessian(const MlpModel& m, std::span<const double> x) {
  const int d = m.num_params();
  std::vector<std::vector<double>> h(d, std::vector<double>(x.size(), 0.0));
  std::vector<double> e(x.size(), 0.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    e[j] = 1.0;
    const auto col = directional_param_gradient(m.spec, m.params, x, e);
    for (int p = 0; p < d; ++p) h[p][j] = col[p];
    e[j] = 0.0;
  }
  return h;
}

std::vector<MlpSpec> feasible_topologies(int budget, int input_width, int tolerance, int max_hidden) {
  if (input_width < 1) throw ArgumentError("input width must be positive");
  std::vector<MlpSpec> out;
  std::vector<int> widths{input_width};
  // partial = parameters of the hidden layers placed so far.
  auto rec = [&](auto&& self, int partial) -> void {
    const int last = widths.back();
    if (widths.size() > 1) {
      const int total = partial + last + 1;
      if (std::abs(total - budget) <= tolerance) {
        MlpSpec s;
        s.widths = widths;
        s.widths.push_back(1);
        out.push_back(std::move(s));
      }
    }
    if (static_cast<int>(widths.size()) - 1 >= max_hidden) return;
    for (int w = 1;; ++w) {
      const int added = last * w + w;
      // Any completion adds at least the output layer (w + 1 parameters).
      if (partial + added + w + 1 > budget + tolerance) break;
      widths.push_back(w);
      self(self, partial + added);
      widths.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

MlpSpec topology_search(int budget, int input_width, int trials, std::uint64_t seed, const TopologyScore& score,
                        int tolerance) {
  if (trials < 1) throw ArgumentError("topology search needs at least one trial");
  auto candidates = feasible_topologies(budget, input_width, tolerance);
  if (candidates.empty()) {
    throw ArgumentError("no MLP topology with input width " + std::to_string(input_width) + " has " +
                        std::to_string(budget) + " +- " + std::to_string(tolerance) + " parameters");
  }
  const auto perm = seeded_permutation(candidates.size(), seed);
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(trials), candidates.size());
  MlpSpec best = candidates[perm[0]];
  best.seed = seed;
  if (!score) return best;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n; ++t) {
    MlpSpec s = candidates[perm[t]];
    s.seed = seed;
    const double v = score(s);
    if (v < best_score) {
      best_score = v;
      best = s;
    }
  }
  return best;
}

MlpRegressor::MlpRegressor(MlpSpec spec, std::vector<InputExpr> expansion)
    : spec_(std::move(spec)), expansion_(std::move(expansion)) {
  spec_.validate();
  if (static_cast<int>(expansion_.size()) != spec_.input_width()) {
    throw ArgumentError("feature expansion width does not match MLP input width");
  }
  for (const auto& e : expansion_)
    for (int j : e.indices) num_inputs_ = std::max(num_inputs_, j + 1);
}

std::vector<double> MlpRegressor::expand(std::span<const double> y) const {
  if (static_cast<int>(y.size()) < num_inputs_) throw ArgumentError("too few inputs for feature expansion");
  std::vector<double> z;
  z.reserve(expansion_.size());
  for (const auto& e : expansion_) z.push_back(e.evaluate(y));
  return z;
}

double MlpRegressor::value(std::span<const double> theta, std::span<const double> y) const {
  const auto z = expand(y);
  return backprop<double>(spec_, theta, std::span<const double>(z), false).value;
}

std::vector<double> MlpRegressor::param_gradient(std::span<const double> theta, std::span<const double> y) const {
  const auto z = expand(y);
  return backprop<double>(spec_, theta, std::span<const double>(z), true).d_params;
}

std::vector<double> MlpRegressor::input_gradient(std::span<const double> theta, std::span<const double> y) const {
  const auto z = expand(y);
  const auto dz = backprop<double>(spec_, theta, std::span<const double>(z), true).d_inputs;
  std::vector<double> dy(y.size(), 0.0);
  for (std::size_t k = 0; k < expansion_.size(); ++k)
    for (std::size_t j = 0; j < y.size(); ++j) dy[j] += dz[k] * expansion_[k].partial(y, static_cast<int>(j));
  return dy;
}

std::vector<std::vector<double>> MlpRegressor::mixed_hessian(std::span<const double> theta,
                                                             std::span<const double> y) const {
  const auto z = expand(y);
  const int d = spec_.num_params();
  std::vector<std::vector<double>> h(d, std::vector<double>(y.size(), 0.0));
  std::vector<double> v(expansion_.size());
  for (std::size_t j = 0; j < y.size(); ++j) {
    for (std::size_t k = 0; k < expansion_.size(); ++k) v[k] = expansion_[k].partial(y, static_cast<int>(j));
    const auto col = directional_param_gradient(spec_, theta, z, v);
    for (int p = 0; p < d; ++p) h[p][j] = col[p];
  }
  return h;
}

void MlpForceField::validate() const {
  mlp.spec.validate();
  if (mlp.num_params() != mlp.spec.num_params()) throw ArgumentError("MLP parameter count mismatch");
  if (static_cast<int>(expansion.size()) != mlp.spec.input_width()) {
    throw ArgumentError("feature expansion width does not match MLP input width");
  }
  for (const auto& e : expansion)
    for (int j : e.indices)
      if (j < 0 || j >= pipeline.num_features()) throw ArgumentError("expansion references unknown feature");
  if (!(labels.scale > 0.0)) throw ArgumentError("label scale must be positive");
}

Prediction predict(const MlpForceField& m, const MoleculeGeometry& geom, bool with_forces) {
  const auto pipe = m.pipeline.evaluate(geom, with_forces);
  const auto reg = m.regressor();
  Prediction p;
  p.energy = m.labels.to_energy(reg.value(m.mlp.params, pipe.features));
  if (with_forces) {
    const auto g = reg.input_gradient(m.mlp.params, pipe.features);
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(g.size()));
    const Eigen::VectorXd f = -m.labels.scale * (pipe.jacobian.transpose() * gv);
    p.forces.assign(f.data(), f.data() + f.size());
  }
  return p;
}

RmseReport evaluate_rmse(const MlpForceField& m, const Dataset& data, bool with_forces) {
  m.validate();
  if (with_forces && !data.has_forces()) throw DataError("force evaluation requested but the data set has no force labels");
  const auto set = prepare_set(m.pipeline, m.labels, data, with_forces);
  return regression_rmse(m.regressor(), m.mlp.params, set, m.labels, with_forces);
}

MlpForceField initialize_mlp(const MlpSpec& spec, std::vector<InputExpr> expansion, DescriptorPipeline pipeline,
                             const Dataset& train, double label_headroom) {
  train.validate();
  const auto geoms = train.geometries();
  pipeline.fit(geoms);
  MlpForceField m;
  m.mlp = mlp_init_xavier(spec);
  m.expansion = std::move(expansion);
  m.pipeline = std::move(pipeline);
  const auto e = train.energies();
  m.labels = LabelScaler::fit(e, label_headroom);
  m.validate();
  return m;
}

std::pair<MlpForceField, TrainReport> mlp_adam_fit(MlpForceField m, const Dataset& train, const LossSpec& spec,
                                                   const AdamConfig& cfg, const Dataset* validation) {
  m.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto set = prepare_set(m.pipeline, m.labels, train, spec.chi > 0.0);
  const auto reg = m.regressor();
  auto fn = [&](std::span<const double> th, std::span<double> g) {
    return regression_loss_gradient(reg, th, set, spec, g);
  };
  auto res = adam_minimize(fn, m.mlp.params, cfg);
  m.mlp.params = res.x;
  TrainReport rep;
  rep.optimizer = "adam";
  rep.settings = {{"learning_rate", text::format_double(cfg.learning_rate)},
                  {"max_steps", std::to_string(cfg.max_steps)},
                  {"seed", std::to_string(cfg.seed)},
                  {"chi", text::format_double(spec.chi)},
                  {"topology", m.mlp.spec.to_string()}};
  rep.loss = res.trajectory;
  rep.epochs = res.iterations;
  rep.epochs_to_convergence = res.epochs_to_convergence;
  rep.converged = res.converged;
  rep.function_evaluations = res.evaluations;
  rep.final_loss = res.value;
  rep.train = evaluate_rmse(m, train, train.has_forces());
  if (validation) rep.validation = evaluate_rmse(m, *validation, validation->has_forces());
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(m), std::move(rep)};
}

std::string mlp_to_text(const MlpForceField& m) {
  m.validate();
  std::ostringstream os;
  os << "mlp.widths = " << m.mlp.spec.to_string() << '\n';
  os << "mlp.seed = " << m.mlp.spec.seed << '\n';
  for (const auto& e : m.expansion) {
    os << "mlp.expansion =";
    for (int j : e.indices) os << ' ' << j;
    os << '\n';
  }
  os << m.pipeline.to_text();
  os << "labels.scale = " << text::format_double(m.labels.scale) << '\n';
  os << "labels.offset = " << text::format_double(m.labels.offset) << '\n';
  os << "model.theta = " << text::join_doubles(m.mlp.params) << '\n';
  os << metadata_to_text(m.metadata);
  return wrap_checkpoint("mlp", os.str());
}

MlpForceField mlp_from_text(const std::string& content) {
  std::string family;
  const auto doc = open_checkpoint(content, &family);
  if (family != "mlp") throw ParseError("checkpoint family '" + family + "' is not an MLP model", 3);
  MlpForceField m;
  const auto& w = doc.get("mlp.widths");
  try {
    m.mlp.spec = MlpSpec::parse(w.value);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what(), w.line);
  }
  const auto& sd = doc.get("mlp.seed");
  m.mlp.spec.seed = static_cast<std::uint64_t>(text::parse_int(sd.value, sd.line));
  for (const auto* e : doc.all("mlp.expansion")) {
    InputExpr ex;
    for (const auto& tok : text::split_ws(e->value)) ex.indices.push_back(static_cast<int>(text::parse_int(tok, e->line)));
    m.expansion.push_back(std::move(ex));
  }
  m.pipeline = DescriptorPipeline::from_text(content);
  const auto& sc = doc.get("labels.scale");
  const auto& off = doc.get("labels.offset");
  m.labels = {text::parse_double(sc.value, sc.line), text::parse_double(off.value, off.line)};
  const auto& th = doc.get("model.theta");
  m.mlp.params = text::parse_doubles(th.value, th.line);
  m.metadata = metadata_from_doc(doc);
  try {
    m.validate();
  } catch (const Error& e) {
    throw ParseError(std::string("inconsistent checkpoint: ") + e.what(), th.line);
  }
  return m;
}

void save_mlp_checkpoint(const MlpForceField& m, const std::string& path) { text::write_file(path, mlp_to_text(m)); }

MlpForceField load_mlp_checkpoint(const std::string& path) { return mlp_from_text(text::read_file(path)); }

}  // namespace qff
