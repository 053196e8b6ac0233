#include "qff/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>

#include "qff/baseline.hpp"
#include "qff/capacity.hpp"
#include "qff/dynamics.hpp"
#include "qff/errors.hpp"
#include "qff/gradients.hpp"
#include "qff/presets.hpp"
#include "qff/textio.hpp"
#include "qff/train.hpp"

namespace qff::cli {

namespace {

void bind_options(CLI::App& app, RunConfig& c) {
  app.add_option("--preset", c.preset, "Molecule preset: lih, h2o, h3o");
  app.add_option("--model", c.model, "Model family: qnn, mlp");
  app.add_option("--depth", c.depth, "Number of re-uploading stages D");
  app.add_option("--entanglement", c.entanglement, "none, linear, circular, full");
  app.add_option("--degree", c.degree, "Highest Z-string order l (1, 2 or 3)");
  app.add_option("--chi", c.chi, "Force weight in the loss");
  app.add_option("--optimizer", c.optimizer, "adam or simplex");
  app.add_option("--steps", c.steps, "ADAM steps, simplex evaluations or MD steps");
  app.add_option("--lr", c.learning_rate, "ADAM learning rate");
  app.add_option("--seed", c.seed, "Random seed");
  app.add_option("--train-size", c.train_size, "Training samples taken from --data");
  app.add_flag("--mirror", c.mirror, "gen: append samples mirrored about the preset mirror point");
  app.add_flag("--no-mirror", c.no_mirror, "train: do not mirror the training split");
  app.add_option("--budget", c.budget, "MLP parameter budget");
  app.add_option("--trials", c.trials, "MLP topologies sampled");
  app.add_option("--search-steps", c.search_steps, "ADAM steps used to score each topology");
  app.add_option("--count", c.count, "gen: number of samples");
  app.add_flag("--fd-forces", c.fd_forces, "gen: finite-difference force labels");
  app.add_flag("--no-forces", c.no_forces, "eval: energies only");
  app.add_option("--n", c.n, "effdim: sample-size parameter n");
  app.add_option("--draws", c.draws, "effdim: Monte Carlo parameter draws");
  app.add_option("--normalization", c.normalization, "effdim: none or trace");
  app.add_option("--dt", c.dt, "md: time step in fs");
  app.add_option("--r0", c.r0, "md: initial bond length for diatomics (A)");
  app.add_option("--start", c.start, "md: index of the starting sample in --data");
  app.add_option("--record-every", c.record_every, "md: frame interval");
  app.add_option("--trajectory", c.trajectory, "spectrum: trajectory file written by md");
  app.add_option("--repetitions", c.repetitions, "spectrum: tiling count");
  app.add_option("--feature", c.feature, "spectrum: swept feature index");
  app.add_option("--grid", c.grid, "spectrum: grid points per period");
  app.add_option("--data", c.data, "Dataset file");
  app.add_option("--checkpoint", c.checkpoint, "Model checkpoint");
  app.add_option("--out", c.out, "Output file or prefix");
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ArgumentError(what);
}

QnnTemplate build_template(const Preset& p, const RunConfig& c) {
  EncodingSpec enc = p.encoding;
  const int depth = c.depth.value_or(p.depth);
  require(depth >= 1, "--depth must be at least 1");
  if (c.entanglement) enc.entanglement = parse_entanglement(*c.entanglement);
  if (c.degree) {
    require(*c.degree >= 1 && *c.degree <= 3, "--degree must be 1, 2 or 3");
    if (*c.degree == 1) enc.entanglement = Entanglement::none;
    if (*c.degree <= 2) {
      enc.degree_sets.clear();
    } else if (enc.degree_sets.empty()) {
      enc.degree_sets = sliding_triples(enc.num_qubits);
    }
  }
  AnsatzSpec ans;
  static_cast<CouplingSpec&>(ans) = enc;
  return assemble_qnn(enc, ans, depth);
}

Dataset load_checked(const Preset& p, const std::string& path) {
  require(!path.empty(), "--data is required");
  auto d = load_dataset(path);
  if (d.elements.size() != p.elements.size()) {
    throw DataError("data set has " + std::to_string(d.elements.size()) + " atoms but preset '" + p.name +
                    "' expects " + std::to_string(p.elements.size()));
  }
  return d;
}

std::pair<Dataset, Dataset> split_for_training(const Preset& p, const RunConfig& c, const Dataset& all) {
  const std::size_t n_train = c.train_size.value_or(std::min(p.train_size, all.size()));
  auto [train, valid] = train_test_split(all, n_train, c.seed);
  if (p.mirror && !c.no_mirror) {
    bool beyond = false;
    for (const auto& s : train.samples) beyond = beyond || bond_coordinate(s) > p.mirror_point;
    if (!beyond) train = mirror_augment(train, p.mirror_point);
  }
  return {std::move(train), std::move(valid)};
}

void check_distinct_paths(const RunConfig& c) {
  const std::vector<std::string> paths{c.data, c.checkpoint, c.out, c.trajectory};
  for (std::size_t i = 0; i < paths.size(); ++i)
    for (std::size_t j = i + 1; j < paths.size(); ++j)
      if (!paths[i].empty() && paths[i] == paths[j]) throw ArgumentError("input and output paths must differ: " + paths[i]);
}

void write_report(const std::string& prefix, const TrainReport& rep) {
  text::write_file(prefix + ".report.txt", rep.to_text());
  text::write_file(prefix + ".loss.csv", rep.loss_curve_csv());
}

void print_rmse(std::ostream& out, const std::string& tag, const RmseReport& r) {
  out << tag << ".rmse_energy_eV = " << text::format_double(r.energy) << '\n';
  out << tag << ".rmse_energy_scaled = " << text::format_double(r.energy_scaled) << '\n';
  if (std::isfinite(r.force)) {
    out << tag << ".rmse_force_eV_per_A = " << text::format_double(r.force) << '\n';
    out << tag << ".rmse_force_scaled = " << text::format_double(r.force_scaled) << '\n';
  }
}

using CartesianFn = std::function<EnergyForces(const MoleculeGeometry&)>;

// Loads either model family and returns its Cartesian energy/force function.
CartesianFn load_force_field(const std::string& path) {
  const auto family = checkpoint_family(path);
  if (family == "qnn") {
    auto m = std::make_shared<QffModel>(load_checkpoint(path));
    return [m](const MoleculeGeometry& g) {
      auto p = predict(*m, g, true);
      return EnergyForces{p.energy, std::move(p.forces)};
    };
  }
  if (family == "mlp") {
    auto m = std::make_shared<MlpForceField>(load_mlp_checkpoint(path));
    return [m](const MoleculeGeometry& g) {
      auto p = predict(*m, g, true);
      return EnergyForces{p.energy, std::move(p.forces)};
    };
  }
  throw DataError("unknown checkpoint family '" + family + "'");
}

}  // namespace

std::optional<int> parse_args(int argc, const char* const* argv, RunConfig& cfg, std::ostream& out,
                              std::ostream& err) {
  CLI::App app{"Quantum neural network force fields"};
  app.add_option("command", cfg.command, "gen | train | eval | effdim | md | spectrum")->required();
  app.add_option("--config", cfg.config, "key = value file; its settings override the command line");
  bind_options(app, cfg);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kArgument;
  }
  if (cfg.config.empty()) return std::nullopt;
  std::vector<std::string> args{"qff"};
  try {
    const auto doc = text::KeyValueDoc::parse(text::read_file(cfg.config));
    for (const auto& e : doc.entries()) args.push_back("--" + e.key + "=" + e.value);
  } catch (const Error& e) {
    err << "error: config file: " << e.what() << '\n';
    return kData;
  }
  CLI::App over{"config"};
  bind_options(over, cfg);
  std::vector<const char*> ptrs;
  for (const auto& a : args) ptrs.push_back(a.c_str());
  try {
    over.parse(static_cast<int>(ptrs.size()), ptrs.data());
  } catch (const CLI::ParseError& e) {
    err << "error: config file " << cfg.config << ": " << e.what() << '\n';
    return kArgument;
  }
  return std::nullopt;
}

void cmd_gen(const RunConfig& c, std::ostream& out) {
  require(!c.out.empty(), "--out is required");
  const auto p = get_preset(c.preset);
  GenOptions opt;
  opt.count = c.count.value_or(0);
  opt.seed = c.seed;
  opt.mirror = c.mirror;
  opt.fd_forces = c.fd_forces;
  const auto d = generate_dataset(p, opt);
  save_dataset(d, c.out);
  out << "gen.preset = " << p.name << "\ngen.samples = " << d.size() << "\ngen.atoms = " << d.num_atoms()
      << "\ngen.out = " << c.out << '\n';
}

void cmd_train(const RunConfig& c, std::ostream& out) {
  check_distinct_paths(c);
  require(!c.checkpoint.empty(), "--checkpoint is required");
  const auto p = get_preset(c.preset);
  const auto all = load_checked(p, c.data);
  const auto [train, valid] = split_for_training(p, c, all);
  const Dataset* vptr = valid.size() ? &valid : nullptr;
  const auto tmpl = build_template(p, c);
  LossSpec loss{c.chi.value_or(p.chi)};
  const std::string optimizer = c.optimizer.value_or(p.optimizer);
  const int steps = c.steps.value_or(p.steps);
  AdamConfig adam;
  adam.learning_rate = c.learning_rate.value_or(p.learning_rate);
  adam.max_steps = steps;
  adam.seed = c.seed;
  const std::string prefix = c.out.empty() ? c.checkpoint : c.out;
  const std::map<std::string, std::string> meta{{"preset", p.name},
                                                {"elements", [&] {
                                                   std::string s;
                                                   for (const auto& e : p.elements) s += (s.empty() ? "" : " ") + e;
                                                   return s;
                                                 }()},
                                                {"data", c.data},
                                                {"optimizer", optimizer},
                                                {"seed", std::to_string(c.seed)}};
  TrainReport rep;
  if (c.model == "qnn") {
    auto model = initialize_model(tmpl, p.make_pipeline(), train);
    model.metadata = meta;
    out << "train.d = " << tmpl.num_params() << '\n';
    if (optimizer == "adam") {
      std::tie(model, rep) = adam_fit(std::move(model), train, loss, adam, vptr);
    } else if (optimizer == "simplex") {
      SimplexConfig sc;
      sc.max_evaluations = steps;
      sc.seed = c.seed;
      std::tie(model, rep) = gradient_free_fit(std::move(model), train, loss, sc, vptr);
    } else {
      throw ArgumentError("unknown optimizer '" + optimizer + "' (adam|simplex)");
    }
    save_checkpoint(model, c.checkpoint);
  } else if (c.model == "mlp") {
    require(optimizer == "adam", "the MLP baseline trains with adam only");
    const auto expansion = tmpl.encoding_features();
    const int budget = c.budget.value_or(tmpl.num_params());
    auto pipeline = p.make_pipeline();
    const auto score = [&](const MlpSpec& spec) {
      auto m = initialize_mlp(spec, expansion, pipeline, train);
      AdamConfig short_run = adam;
      short_run.max_steps = c.search_steps;
      auto [fit, r] = mlp_adam_fit(std::move(m), train, loss, short_run, vptr);
      return vptr ? r.validation->energy_scaled : r.train.energy_scaled;
    };
    const auto spec = topology_search(budget, static_cast<int>(expansion.size()), c.trials, c.seed, score);
    auto model = initialize_mlp(spec, expansion, pipeline, train);
    model.metadata = meta;
    model.metadata["budget"] = std::to_string(budget);
    out << "train.topology = " << spec.to_string() << "\ntrain.d = " << spec.num_params()
        << "\ntrain.d_hidden_only = " << spec.num_params() - (spec.widths[0] * spec.widths[1] + spec.widths[1])
        << '\n';
    std::tie(model, rep) = mlp_adam_fit(std::move(model), train, loss, adam, vptr);
    save_mlp_checkpoint(model, c.checkpoint);
  } else {
    throw ArgumentError("unknown model family '" + c.model + "' (qnn|mlp)");
  }
  write_report(prefix, rep);
  out << "train.epochs = " << rep.epochs << "\ntrain.final_loss = " << text::format_double(rep.final_loss) << '\n';
  print_rmse(out, "train", rep.train);
  if (rep.validation) print_rmse(out, "validation", *rep.validation);
  out << "train.checkpoint = " << c.checkpoint << '\n';
}

void cmd_eval(const RunConfig& c, std::ostream& out) {
  check_distinct_paths(c);
  require(!c.checkpoint.empty(), "--checkpoint is required");
  require(!c.data.empty(), "--data is required");
  const auto data = load_dataset(c.data);
  const bool with_forces = !c.no_forces;
  if (with_forces && !data.has_forces()) {
    throw DataError("force evaluation requested but " + c.data + " has no force labels (use --no-forces)");
  }
  const auto family = checkpoint_family(c.checkpoint);
  RmseReport r;
  std::function<Prediction(const MoleculeGeometry&)> pred;
  int atoms = 0;
  if (family == "qnn") {
    auto m = std::make_shared<QffModel>(load_checkpoint(c.checkpoint));
    atoms = m->pipeline.num_atoms();
    if (atoms != data.num_atoms()) throw DataError("model expects " + std::to_string(atoms) + " atoms, data has " + std::to_string(data.num_atoms()));
    r = evaluate_rmse(*m, data, with_forces);
    pred = [m, with_forces](const MoleculeGeometry& g) { return predict(*m, g, with_forces); };
  } else if (family == "mlp") {
    auto m = std::make_shared<MlpForceField>(load_mlp_checkpoint(c.checkpoint));
    atoms = m->pipeline.num_atoms();
    if (atoms != data.num_atoms()) throw DataError("model expects " + std::to_string(atoms) + " atoms, data has " + std::to_string(data.num_atoms()));
    r = evaluate_rmse(*m, data, with_forces);
    pred = [m, with_forces](const MoleculeGeometry& g) { return predict(*m, g, with_forces); };
  } else {
    throw DataError("unknown checkpoint family '" + family + "'");
  }
  print_rmse(out, "eval", r);
  out << "eval.samples = " << r.samples << '\n';
  if (!c.out.empty()) {
    std::ostringstream es, fs;
    es << "sample,energy_label_eV,energy_pred_eV\n";
    fs << "sample,component,force_label,force_pred\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto p = pred(data.geometry(i));
      es << i << ',' << text::format_double(data.samples[i].energy) << ',' << text::format_double(p.energy) << '\n';
      if (with_forces) {
        for (std::size_t k = 0; k < p.forces.size(); ++k)
          fs << i << ',' << k << ',' << text::format_double((*data.samples[i].forces)[k]) << ','
             << text::format_double(p.forces[k]) << '\n';
      }
    }
    text::write_file(c.out, es.str());
    if (with_forces) text::write_file(c.out + ".forces.csv", fs.str());
  }
}

void cmd_effdim(const RunConfig& c, std::ostream& out) {
  check_distinct_paths(c);
  const auto p = get_preset(c.preset);
  std::vector<std::vector<double>> inputs;
  EffDimConfig ec;
  ec.draws = c.draws;
  ec.seed = c.seed;
  ec.normalization = parse_fisher_normalization(c.normalization);
  std::unique_ptr<DifferentiableRegressor> reg;
  QnnTemplate tmpl;
  DescriptorPipeline pipeline;
  if (!c.checkpoint.empty() && checkpoint_family(c.checkpoint) == "qnn") {
    auto m = load_checkpoint(c.checkpoint);
    tmpl = m.tmpl;
    pipeline = m.pipeline;
  } else {
    tmpl = build_template(p, c);
    pipeline = p.make_pipeline();
  }
  const auto all = load_checked(p, c.data);
  const auto [train, valid] = split_for_training(p, c, all);
  if (!pipeline.fitted()) {
    const auto geoms = train.geometries();
    pipeline.fit(geoms);
  }
  for (std::size_t i = 0; i < train.size(); ++i) inputs.push_back(pipeline.apply(train.geometry(i)));
  ec.n = c.n.value_or(static_cast<double>(inputs.size()));
  if (c.model == "qnn") {
    reg = std::make_unique<QnnRegressor>(tmpl);
    ec.domain = ParameterDomain::rotation_angles();
  } else if (c.model == "mlp") {
    const auto expansion = tmpl.encoding_features();
    const auto spec = topology_search(c.budget.value_or(tmpl.num_params()), static_cast<int>(expansion.size()),
                                      1, c.seed);
    out << "effdim.topology = " << spec.to_string() << '\n';
    reg = std::make_unique<MlpRegressor>(spec, expansion);
    ec.domain = ParameterDomain::unit_box();
  } else {
    throw ArgumentError("unknown model family '" + c.model + "' (qnn|mlp)");
  }
  const auto rep = effective_dimension(*reg, inputs, ec);
  out << rep.to_text();
  if (!c.out.empty()) text::write_file(c.out, rep.to_text());
}

void cmd_md(const RunConfig& c, std::ostream& out) {
  check_distinct_paths(c);
  const auto p = get_preset(c.preset);
  MdConfig md;
  md.dt = c.dt;
  md.steps = c.steps.value_or(10000);
  md.record_every = c.record_every;
  ForceProvider provider;
  CartesianFn cart;
  if (!c.checkpoint.empty()) cart = load_force_field(c.checkpoint);
  if (p.elements.size() == 2) {
    md.dof_per_atom = 1;
    md.masses = {reduced_mass(atomic_mass(p.elements[0]), atomic_mass(p.elements[1]))};
    md.positions = {c.r0};
    provider = cart ? bond_coordinate_provider(cart, p.elements) : morse_bond_provider(MorseParams{});
  } else {
    require(!c.data.empty(), "--data is required to pick a starting geometry for polyatomic presets");
    const auto d = load_checked(p, c.data);
    require(c.start < d.size(), "--start is beyond the data set");
    for (const auto& e : p.elements) md.masses.push_back(atomic_mass(e));
    md.positions = d.samples[c.start].cartesian;
    if (!cart) cart = [p](const MoleculeGeometry& g) { return preset_oracle(p, g); };
    provider = [cart, els = p.elements](std::span<const double> x) {
      return cart(MoleculeGeometry{els, std::vector<double>(x.begin(), x.end())});
    };
  }
  const auto traj = velocity_verlet_run(provider, md);
  out << "md.frames = " << traj.size() << "\nmd.max_relative_drift = " << text::format_double(traj.max_relative_drift())
      << '\n';
  const auto series = distance_series(traj, md.dof_per_atom);
  if (series.size() > 2) {
    const auto s = oscillation_spectrum(series, traj.dt, c.repetitions);
    out << "md.dominant_frequency_THz = " << text::format_double(dominant_frequency(s)) << '\n';
  }
  if (!c.out.empty()) text::write_file(c.out, traj.to_csv());
}

namespace {

// Reads the t_fs and position columns back from Trajectory::to_csv output.
Trajectory read_trajectory(const std::string& path) {
  const auto content = text::read_file(path);
  std::istringstream is(content);
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty trajectory file", 1);
  const auto header = text::split(line, ',');
  if (header.empty() || header[0] != "t_fs") throw ParseError("trajectory header must start with t_fs", 1);
  std::size_t dof = 0;
  while (dof + 1 < header.size() && header[dof + 1] == "x" + std::to_string(dof)) ++dof;
  if (dof == 0) throw ParseError("trajectory has no position columns", 1);
  Trajectory t;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (text::trim(line).empty()) continue;
    const auto cols = text::split(line, ',');
    if (cols.size() != header.size()) throw ParseError("wrong column count", row);
    t.time.push_back(text::parse_double(cols[0], row));
    std::vector<double> x(dof);
    for (std::size_t k = 0; k < dof; ++k) x[k] = text::parse_double(cols[k + 1], row);
    t.positions.push_back(std::move(x));
  }
  if (t.time.size() < 2) throw DataError("trajectory needs at least two frames");
  t.dt = t.time[1] - t.time[0];
  return t;
}

}  // namespace

void cmd_spectrum(const RunConfig& c, std::ostream& out) {
  check_distinct_paths(c);
  std::ostringstream csv;
  if (!c.trajectory.empty()) {
    const auto t = read_trajectory(c.trajectory);
    const int dof = t.positions.front().size() == 1 ? 1 : 3;
    const auto s = oscillation_spectrum(distance_series(t, dof), t.dt, c.repetitions);
    out << "spectrum.bin_width_THz = " << text::format_double(s.bin_width)
        << "\nspectrum.dominant_frequency_THz = " << text::format_double(dominant_frequency(s)) << '\n';
    csv << s.to_csv();
  } else {
    QnnTemplate tmpl;
    std::vector<double> theta;
    if (!c.checkpoint.empty()) {
      auto m = load_checkpoint(c.checkpoint);
      tmpl = m.tmpl;
      theta = m.theta;
    } else {
      tmpl = build_template(get_preset(c.preset), c);
      std::mt19937_64 rng(c.seed);
      std::uniform_real_distribution<double> u(-3.141592653589793, 3.141592653589793);
      theta.resize(tmpl.num_params());
      for (double& t : theta) t = u(rng);
    }
    const auto mag = qnn_model_spectrum(tmpl, theta, c.feature, c.grid);
    csv << "frequency,magnitude\n";
    std::size_t support = 0;
    for (std::size_t k = 0; k < mag.size(); ++k) {
      csv << k << ',' << text::format_double(mag[k]) << '\n';
      if (mag[k] > 1e-10) support = k;
    }
    out << "spectrum.max_frequency = " << support << '\n';
  }
  if (!c.out.empty()) text::write_file(c.out, csv.str());
  else out << csv.str();
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.command == "gen") cmd_gen(cfg, out);
    else if (cfg.command == "train") cmd_train(cfg, out);
    else if (cfg.command == "eval") cmd_eval(cfg, out);
    else if (cfg.command == "effdim") cmd_effdim(cfg, out);
    else if (cfg.command == "md") cmd_md(cfg, out);
    else if (cfg.command == "spectrum") cmd_spectrum(cfg, out);
    else throw ArgumentError("unknown command '" + cfg.command + "'");
    return kOk;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kArgument;
  } catch (const CapacityError& e) {
    err << "error: " << e.what() << '\n';
    return kArgument;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kOther;
  }
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  if (auto code = parse_args(argc, argv, cfg, out, err)) return *code;
  return run(cfg, out, err);
}

}  // namespace qff::cli
