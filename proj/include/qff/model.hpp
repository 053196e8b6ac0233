#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "qff/circuit.hpp"
#include "qff/descriptors.hpp"
#include "qff/textio.hpp"

namespace qff {

// Affine label transform E = scale * f + offset. fit() maps the training
// range [E_min, E_max] onto [-(1 - headroom), 1 - headroom].
struct LabelScaler {
  double scale = 1.0;
  double offset = 0.0;

  static LabelScaler fit(std::span<const double> energies, double headroom = 0.1);
  double to_scaled(double energy) const { return (energy - offset) / scale; }
  double to_energy(double f) const { return scale * f + offset; }
};

struct Prediction {
  double energy = 0.0;
  std::vector<double> forces;  // eV/A, length 3n
};

struct QffModel {
  QnnTemplate tmpl;
  DescriptorPipeline pipeline;
  std::vector<double> theta;
  LabelScaler labels;
  std::map<std::string, std::string> metadata;

  int num_params() const { return tmpl.num_params(); }
  void validate() const;
};

double predict_energy(const QffModel& model, const MoleculeGeometry& geom);
std::vector<double> predict_forces(const QffModel& model, const MoleculeGeometry& geom);
Prediction predict(const QffModel& model, const MoleculeGeometry& geom, bool with_forces = true);

// Checkpoint container shared by every model family:
//   checkpoint.format = qff / checkpoint.version = 1 / checkpoint.family = <tag>
//   ... body ...
//   checkpoint.end = true
inline constexpr int kCheckpointVersion = 1;

std::string wrap_checkpoint(const std::string& family, const std::string& body);
// Validates the envelope and returns the parsed document; throws ParseError
// on truncation and on an unsupported version.
text::KeyValueDoc open_checkpoint(const std::string& content, std::string* family = nullptr);
std::string checkpoint_family(const std::string& path);

std::string model_to_text(const QffModel& model);
QffModel model_from_text(const std::string& content);
void save_checkpoint(const QffModel& model, const std::string& path);
QffModel load_checkpoint(const std::string& path);

std::string metadata_to_text(const std::map<std::string, std::string>& meta);
std::map<std::string, std::string> metadata_from_doc(const text::KeyValueDoc& doc);

}  // namespace qff
