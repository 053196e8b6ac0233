#include <doctest.h>

#include <sstream>

#include "qff/cli.hpp"
#include "qff/data.hpp"
#include "qff/model.hpp"
#include "qff/textio.hpp"
#include "test_util.hpp"

using namespace qff;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "qff");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string value_of(const std::string& out, const std::string& key) {
  const auto pos = out.find(key + " = ");
  REQUIRE(pos != std::string::npos);
  const auto start = pos + key.size() + 3;
  return out.substr(start, out.find('\n', start) - start);
}

}  // namespace

TEST_CASE("gen writes the requested samples") {
  const auto dir = qff::testing::temp_dir("cli_gen");
  const auto path = (dir / "lih.dat").string();
  auto r = run_cli({"gen", "--preset", "lih", "--count", "170", "--out", path});
  REQUIRE(r.code == 0);
  CHECK(load_dataset(path).size() == 170);
  r = run_cli({"gen", "--preset", "lih", "--count", "20", "--mirror", "--out", path});
  REQUIRE(r.code == 0);
  const auto mirrored = load_dataset(path);
  CHECK(mirrored.size() == 39);  // the sample at the mirror point is its own image
  double rmax = 0.0;
  for (const auto& s : mirrored.samples) rmax = std::max(rmax, s.cartesian[3]);
  CHECK(rmax > 4.5);
  r = run_cli({"gen", "--preset", "h2o", "--count", "6", "--out", path});
  REQUIRE(r.code == 0);
  const auto h2o = load_dataset(path);
  CHECK(h2o.num_atoms() == 3);
  CHECK(h2o.has_forces());
}

TEST_CASE("exit codes") {
  CHECK(run_cli({"bogus"}).code == cli::kArgument);
  CHECK(run_cli({"gen", "--frobnicate"}).code == cli::kArgument);
  CHECK(run_cli({"gen", "--preset", "nope", "--out", "/tmp/x"}).code == cli::kArgument);
  CHECK(run_cli({"train", "--data", "/nonexistent/file.dat", "--checkpoint", "/tmp/qff_c.qff"}).code == cli::kData);
  CHECK(run_cli({"eval", "--data", "same", "--checkpoint", "same"}).code == cli::kArgument);
  CHECK(run_cli({"md", "--dt", "-1"}).code == cli::kArgument);
  CHECK(run_cli({"effdim", "--n", "5", "--data", "/nonexistent"}).code != cli::kOk);
  CHECK(run_cli({"--help"}).code == cli::kOk);
}

TEST_CASE("train, eval and effdim on a small LiH set") {
  const auto dir = qff::testing::temp_dir("cli_train");
  const auto data = (dir / "lih.dat").string(), ck = (dir / "m.qff").string();
  REQUIRE(run_cli({"gen", "--preset", "lih", "--count", "24", "--out", data}).code == 0);
  auto r = run_cli({"train", "--preset", "lih", "--data", data, "--checkpoint", ck, "--steps", "3", "--train-size", "8"});
  REQUIRE(r.code == 0);
  CHECK(value_of(r.out, "train.d") == "73");
  CHECK(std::filesystem::exists(ck + ".report.txt"));
  CHECK(text::read_file(ck + ".loss.csv").substr(0, 9) == "step,loss");
  const auto first = text::read_file(ck);
  REQUIRE(run_cli({"train", "--preset", "lih", "--data", data, "--checkpoint", ck, "--steps", "3", "--train-size", "8"}).code == 0);
  CHECK(text::read_file(ck) == first);

  const auto scatter = (dir / "scatter.csv").string();
  r = run_cli({"eval", "--data", data, "--checkpoint", ck, "--out", scatter});
  REQUIRE(r.code == 0);
  CHECK(value_of(r.out, "eval.samples") == "24");
  CHECK(text::read_file(scatter).substr(0, 6) == "sample");

  const auto bare = (dir / "bare.dat").string();
  auto d = load_dataset(data);
  for (auto& s : d.samples) s.forces.reset();
  save_dataset(d, bare);
  CHECK(run_cli({"eval", "--data", bare, "--checkpoint", ck}).code == cli::kData);
  CHECK(run_cli({"eval", "--data", bare, "--checkpoint", ck, "--no-forces"}).code == 0);

  r = run_cli({"effdim", "--preset", "lih", "--data", data, "--draws", "3", "--train-size", "8", "--n", "50"});
  REQUIRE(r.code == 0);
  const double nd = std::stod(value_of(r.out, "effdim.normalized"));
  CHECK(nd >= 0.0);
  CHECK(nd <= 1.0);
  CHECK(run_cli({"effdim", "--preset", "lih", "--data", data, "--draws", "3", "--n", "10"}).code == cli::kArgument);

  const auto mck = (dir / "mlp.qff").string();
  r = run_cli({"train", "--preset", "lih", "--model", "mlp", "--data", data, "--checkpoint", mck, "--steps", "5",
               "--train-size", "8", "--trials", "2", "--search-steps", "2"});
  REQUIRE(r.code == 0);
  const int d_mlp = std::stoi(value_of(r.out, "train.d"));
  CHECK(std::abs(d_mlp - 73) <= 2);
  CHECK(run_cli({"eval", "--data", data, "--checkpoint", mck}).code == 0);
}

TEST_CASE("config file overrides flags") {
  const auto dir = qff::testing::temp_dir("cli_config");
  const auto data = (dir / "a.dat").string(), cfg = (dir / "run.cfg").string();
  text::write_file(cfg, "count = 7\nout = " + data + "\n");
  auto r = run_cli({"gen", "--count", "30", "--config", cfg});
  REQUIRE(r.code == 0);
  CHECK(load_dataset(data).size() == 7);
  text::write_file(cfg, "unknown-key = 1\n");
  CHECK(run_cli({"gen", "--config", cfg}).code == cli::kArgument);
  CHECK(run_cli({"gen", "--config", (dir / "missing.cfg").string()}).code == cli::kData);
}

TEST_CASE("md and spectrum") {
  const auto dir = qff::testing::temp_dir("cli_md");
  const auto traj = (dir / "t.csv").string(), spec = (dir / "s.csv").string();
  auto r = run_cli({"md", "--preset", "lih", "--r0", "1.5957", "--steps", "200", "--out", traj});
  REQUIRE(r.code == 0);
  const auto t = text::read_file(traj);
  CHECK(t.substr(0, 7) == "t_fs,x0");
  r = run_cli({"md", "--preset", "lih", "--steps", "10000", "--dt", "0.02", "--out", traj});
  REQUIRE(r.code == 0);
  CHECK(std::stod(value_of(r.out, "md.max_relative_drift")) <= 1e-4);
  const double f_md = std::stod(value_of(r.out, "md.dominant_frequency_THz"));
  r = run_cli({"spectrum", "--trajectory", traj, "--out", spec});
  REQUIRE(r.code == 0);
  CHECK(std::stod(value_of(r.out, "spectrum.dominant_frequency_THz")) == doctest::Approx(f_md));

  r = run_cli({"spectrum", "--preset", "lih", "--depth", "1", "--degree", "1", "--seed", "3", "--out", spec});
  REQUIRE(r.code == 0);
  CHECK(value_of(r.out, "spectrum.max_frequency") == "1");
  r = run_cli({"spectrum", "--preset", "lih", "--depth", "3", "--degree", "1", "--seed", "3", "--out", spec});
  CHECK(value_of(r.out, "spectrum.max_frequency") == "3");
}

TEST_CASE("polyatomic md from a data sample") {
  const auto dir = qff::testing::temp_dir("cli_md3");
  const auto data = (dir / "h2o.dat").string();
  REQUIRE(run_cli({"gen", "--preset", "h2o", "--count", "3", "--out", data}).code == 0);
  auto r = run_cli({"md", "--preset", "h2o", "--data", data, "--steps", "500", "--dt", "0.05"});
  REQUIRE(r.code == 0);
  CHECK(std::stod(value_of(r.out, "md.max_relative_drift")) < 1e-3);
  CHECK(run_cli({"md", "--preset", "h2o", "--steps", "5"}).code == cli::kArgument);
}
