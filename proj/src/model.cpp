#include "qff/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qff/errors.hpp"
#include "qff/gradients.hpp"

namespace qff {

LabelScaler LabelScaler::fit(std::span<const double> energies, double headroom) {
  if (energies.empty()) throw DataError("cannot fit label scaling on an empty set");
  if (!(headroom >= 0.0 && headroom < 1.0)) throw ArgumentError("label headroom must lie in [0, 1)");
  const auto [lo, hi] = std::minmax_element(energies.begin(), energies.end());
  LabelScaler s;
  s.offset = 0.5 * (*lo + *hi);
  const double half_range = 0.5 * (*hi - *lo);
  s.scale = half_range > 0.0 ? half_range / (1.0 - headroom) : 1.0;
  return s;
}

void QffModel::validate() const {
  if (tmpl.num_features() != pipeline.num_features()) {
    throw ArgumentError("template expects " + std::to_string(tmpl.num_features()) +
                        " features but pipeline produces " + std::to_string(pipeline.num_features()));
  }
  if (static_cast<int>(theta.size()) != tmpl.num_params()) {
    throw ArgumentError("parameter vector length does not match template");
  }
  if (!(labels.scale > 0.0)) throw ArgumentError("label scale must be positive");
}

Prediction predict(const QffModel& m, const MoleculeGeometry& geom, bool with_forces) {
  const auto pipe = m.pipeline.evaluate(geom, with_forces);
  Prediction p;
  p.energy = m.labels.to_energy(eval_qnn(m.tmpl, pipe.features, m.theta));
  if (with_forces) {
    const auto g = grad_inputs(m.tmpl, pipe.features, m.theta);
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(g.size()));
    const Eigen::VectorXd f = -m.labels.scale * (pipe.jacobian.transpose() * gv);
    p.forces.assign(f.data(), f.data() + f.size());
  }
  return p;
}

double predict_energy(const QffModel& m, const MoleculeGeometry& geom) {
  return predict(m, geom, false).energy;
}

std::vector<double> predict_forces(const QffModel& m, const MoleculeGeometry& geom) {
  return predict(m, geom, true).forces;
}

std::string wrap_checkpoint(const std::string& family, const std::string& body) {
  std::ostringstream os;
  os << "checkpoint.format = qff\n";
  os << "checkpoint.version = " << kCheckpointVersion << '\n';
  os << "checkpoint.family = " << family << '\n';
  os << body;
  os << "checkpoint.end = true\n";
  return os.str();
}

text::KeyValueDoc open_checkpoint(const std::string& content, std::string* family) {
  auto doc = text::KeyValueDoc::parse(content);
  if (doc.entries().empty() || doc.entries().front().key != "checkpoint.format" ||
      doc.entries().front().value != "qff") {
    throw ParseError("not a qff checkpoint (missing 'checkpoint.format = qff' header)", 1);
  }
  const auto& ver = doc.get("checkpoint.version");
  const long v = text::parse_int(ver.value, ver.line);
  if (v != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(v) + " (this build reads version " +
                         std::to_string(kCheckpointVersion) + ")",
                     ver.line);
  }
  if (doc.entries().back().key != "checkpoint.end") {
    throw ParseError("checkpoint truncated: missing 'checkpoint.end' trailer", doc.last_line());
  }
  if (family) *family = doc.get("checkpoint.family").value;
  return doc;
}

std::string checkpoint_family(const std::string& path) {
  std::string family;
  open_checkpoint(text::read_file(path), &family);
  return family;
}

std::string metadata_to_text(const std::map<std::string, std::string>& meta) {
  std::string out;
  for (const auto& [k, v] : meta) out += "meta." + k + " = " + v + '\n';
  return out;
}

std::map<std::string, std::string> metadata_from_doc(const text::KeyValueDoc& doc) {
  std::map<std::string, std::string> meta;
  for (const auto& e : doc.entries())
    if (e.key.rfind("meta.", 0) == 0) meta[e.key.substr(5)] = e.value;
  return meta;
}

std::string model_to_text(const QffModel& m) {
  m.validate();
  std::ostringstream os;
  os << m.tmpl.to_text();
  os << m.pipeline.to_text();
  os << "labels.scale = " << text::format_double(m.labels.scale) << '\n';
  os << "labels.offset = " << text::format_double(m.labels.offset) << '\n';
  os << "model.theta = " << text::join_doubles(m.theta) << '\n';
  os << metadata_to_text(m.metadata);
  return wrap_checkpoint("qnn", os.str());
}

QffModel model_from_text(const std::string& content) {
  std::string family;
  const auto doc = open_checkpoint(content, &family);
  if (family != "qnn") throw ParseError("checkpoint family '" + family + "' is not a QNN model", 3);
  QffModel m;
  m.tmpl = QnnTemplate::from_text(content);
  m.pipeline = DescriptorPipeline::from_text(content);
  if (!m.pipeline.fitted()) throw ParseError("pipeline scaler bounds missing", doc.get("pipeline.atoms").line);
  const auto& sc = doc.get("labels.scale");
  const auto& off = doc.get("labels.offset");
  m.labels = {text::parse_double(sc.value, sc.line), text::parse_double(off.value, off.line)};
  const auto& th = doc.get("model.theta");
  m.theta = text::parse_doubles(th.value, th.line);
  m.metadata = metadata_from_doc(doc);
  try {
    m.validate();
  } catch (const Error& e) {
    throw ParseError(std::string("inconsistent checkpoint: ") + e.what(), th.line);
  }
  return m;
}

void save_checkpoint(const QffModel& m, const std::string& path) { text::write_file(path, model_to_text(m)); }

QffModel load_checkpoint(const std::string& path) { return model_from_text(text::read_file(path)); }

}  // namespace qff
