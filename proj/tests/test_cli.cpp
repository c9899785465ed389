#include <doctest.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kSmall =
    " --set solver.n_particles=2000 --set solver.detection_window=5 --set solver.min_average_time=10"
    " --set solver.sub_windows=8 --set solver.snapshot_pairs=20000";
const std::string kSmallSweep = kSmall + " --set study.alphas=[0,0.05,0.1] --set study.floor_particles=2000"
                                         " --set study.floor_replicas=2";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("annihilation_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args, const fs::path& log, const std::string& env = "") {
  const std::string cmd = env + " \"" ANNIHILATION_KINETICS_BIN "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("validate subcommand") {
  const fs::path dir = scratch("validate");
  CHECK(run("validate --filter povzner --out " + dir.string(), dir / "log") == 0);
  const json j = json::parse(slurp(dir / "validate.json"));
  CHECK(j["checks"].size() == 3);
  CHECK(j["failed"] == 0);
  CHECK(j.contains("config_hash"));
  CHECK(fs::exists(dir / "manifest.json"));

  const fs::path bad = scratch("validate_fault");
  CHECK(run("validate --filter loss_kernel --set validate.inject_fault=k3 --out " + bad.string(), bad / "log") == 1);
  const json f = json::parse(slurp(bad / "validate.json"));
  bool named = false;
  for (const auto& c : f["checks"])
    if (c["name"] == "loss_kernel_d3" && c["pass"] == false) named = true;
  CHECK(named);
  CHECK(slurp(bad / "log").find("FAIL loss_kernel_d3") != std::string::npos);
}

TEST_CASE("configuration errors exit with 2") {
  const fs::path dir = scratch("errors");
  CHECK(run("validate --set solver.bogus=1 --out " + dir.string(), dir / "log") == 2);
  CHECK(run("simulate --set solver.alpha=1.5 --out " + dir.string(), dir / "log") == 2);
  CHECK(run("frobnicate", dir / "log") == 2);
  CHECK(run("validate --set validate.inject_fault=gremlin --out " + dir.string(), dir / "log") == 2);
  CHECK(run("simulate --config /nonexistent.json --out " + dir.string(), dir / "log") == 2);
  CHECK(run("simulate --set init=two_shells(0,0,0.5) --out " + dir.string(), dir / "log") == 2);
}

TEST_CASE("simulate is deterministic and restartable") {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  CHECK(run("simulate" + kSmall + " --out " + a.string(), a / "log") == 0);
  CHECK(run("simulate" + kSmall + " --out " + b.string(), b / "log") == 0);
  for (const char* f : {"timeseries.csv", "histogram.csv", "profile.json", "checkpoint.json"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const json m = json::parse(slurp(a / "manifest.json"));
  const std::string hash = m["config_hash"];
  CHECK(slurp(a / "timeseries.csv").rfind("# config_hash=" + hash + "\n", 0) == 0);
  CHECK(json::parse(slurp(a / "profile.json"))["config_hash"] == hash);
  CHECK(m["seeds"].size() == 1);
  CHECK(m["partial"] == false);

  const fs::path c = scratch("sim_restore");
  CHECK(run("simulate" + kSmall + " --restore " + (a / "checkpoint.json").string() + " --out " + c.string(),
            c / "log") == 0);
  CHECK(run("simulate" + kSmall + " --set solver.d=2 --restore " + (a / "checkpoint.json").string() + " --out " +
                c.string(),
            c / "log") == 2);
  CHECK(run("simulate" + kSmall + " --set solver.alpha=0.05 --restore " + (a / "checkpoint.json").string() +
                " --out " + c.string(),
            c / "log") == 2);
}

TEST_CASE("timeouts exit with 3") {
  const fs::path dir = scratch("timeout");
  CHECK(run("simulate" + kSmall + " --set solver.t_max=5 --out " + dir.string(), dir / "log") == 3);
  CHECK(json::parse(slurp(dir / "manifest.json"))["partial"] == true);
}

TEST_CASE("output directory from the environment") {
  const fs::path dir = scratch("env");
  CHECK(run("validate --filter alpha_thresholds", dir / "log", "ANNIHILATION_KINETICS_OUT=\"" + dir.string() + "/o\"") ==
        0);
  CHECK(fs::exists(dir / "o" / "validate.json"));
}

TEST_CASE("sweep and derived studies") {
  const fs::path dir = scratch("sweep");
  CHECK(run("sweep" + kSmallSweep + " --workers 2 --out " + dir.string(), dir / "log") == 0);
  std::istringstream csv(slurp(dir / "sweep.csv"));
  std::string line;
  int alpha_rows = 0, floor_rows = 0, lines = 0;
  while (std::getline(csv, line)) {
    ++lines;
    if (line.rfind("alpha,", 0) == 0) ++alpha_rows;
    if (line.rfind("noise_floor,", 0) == 0) ++floor_rows;
  }
  CHECK(alpha_rows == 3);
  CHECK(floor_rows == 1);
  CHECK(lines == 6);

  const fs::path tails = scratch("tails");
  CHECK(run("tails" + kSmallSweep + " --from " + dir.string() + " --out " + tails.string(), tails / "log") == 0);
  CHECK(fs::exists(tails / "tails.csv"));
  const fs::path nonlin = scratch("nonlinear");
  CHECK(run("nonlinear" + kSmallSweep + " --from " + dir.string() + " --out " + nonlin.string(), nonlin / "log") ==
        0);
  CHECK(fs::exists(nonlin / "nonlinear.csv"));
  CHECK(run("tails" + kSmallSweep + " --seed 9 --from " + dir.string() + " --out " + tails.string(), tails / "log") ==
        2);
  CHECK(slurp(tails / "log").find("refusing") != std::string::npos);
}
