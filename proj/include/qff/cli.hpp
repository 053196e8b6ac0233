#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qff::cli {

enum ExitCode : int { kOk = 0, kOther = 1, kArgument = 2, kData = 3, kNumerical = 4 };

struct RunConfig {
  std::string command;  // gen | train | eval | effdim | md | spectrum
  std::string preset = "lih";
  std::string model = "qnn";  // qnn | mlp

  std::optional<int> depth;
  std::optional<std::string> entanglement;
  std::optional<int> degree;  // highest Z-string order: 1, 2 or 3

  std::optional<double> chi;
  std::optional<std::string> optimizer;  // adam | simplex
  std::optional<int> steps;
  std::optional<double> learning_rate;
  std::uint64_t seed = 0;
  std::optional<std::size_t> train_size;
  bool mirror = false;     // gen: append mirrored samples
  bool no_mirror = false;  // train: skip the preset's mirroring of the training split

  std::optional<int> budget;  // mlp parameter budget (default: QNN d)
  int trials = 4;             // mlp topology samples
  int search_steps = 200;     // short run used to score each topology

  std::optional<std::size_t> count;
  bool fd_forces = false;
  bool no_forces = false;

  std::optional<double> n;
  int draws = 100;
  std::string normalization = "none";

  double dt = 0.1;  // fs
  double r0 = 1.05;
  std::size_t start = 0;
  int record_every = 1;

  std::string trajectory;
  int repetitions = 1;
  int feature = 0;
  int grid = 64;

  std::string data;
  std::string checkpoint;
  std::string out;
  std::string config;
};

// Parses argv; a --config file (key = value, keys named like the long flags)
// is applied after the command line and so takes precedence. Returns an exit
// code when parsing ends the run early (help, errors).
std::optional<int> parse_args(int argc, const char* const* argv, RunConfig& cfg, std::ostream& out,
                              std::ostream& err);

void cmd_gen(const RunConfig& cfg, std::ostream& out);
void cmd_train(const RunConfig& cfg, std::ostream& out);
void cmd_eval(const RunConfig& cfg, std::ostream& out);
void cmd_effdim(const RunConfig& cfg, std::ostream& out);
void cmd_md(const RunConfig& cfg, std::ostream& out);
void cmd_spectrum(const RunConfig& cfg, std::ostream& out);

// Dispatches cfg.command and maps library errors onto exit codes.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qff::cli
