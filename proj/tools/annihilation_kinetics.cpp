#include "annihilation/config.hpp"
#include "annihilation/dsmc.hpp"
#include "annihilation/experiments.hpp"
#include "annihilation/reports.hpp"
#include "annihilation/validation.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace annihilation;

namespace {

enum Exit { kOk = 0, kCheckFailure = 1, kConfigError = 2, kPartial = 3 };

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  int workers = 0;
  std::string out;
  std::string seed;
  std::string filter;
  std::string from;
  std::string restore;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON configuration file");
  cmd->add_option("--set", o.sets, "Override one key, e.g. --set solver.alpha=0.05")->take_all();
  cmd->add_option("--workers", o.workers, "Worker threads for independent runs");
  cmd->add_option("--out", o.out, "Output directory (default: $ANNIHILATION_KINETICS_OUT, then ./out)");
  cmd->add_option("--seed", o.seed, "Base seed");
}

RunConfig build_config(const CommonOptions& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  for (const auto& s : o.sets) cfg.set(s);
  if (o.workers != 0) cfg.study.workers = o.workers;
  if (!o.seed.empty()) {
    try {
      cfg.study.solver.seed = std::stoull(o.seed);
    } catch (const std::exception&) {
      throw ConfigError("--seed expects a non-negative integer");
    }
  }
  if (!o.out.empty()) {
    cfg.output.dir = o.out;
  } else if (cfg.output.dir.empty()) {
    const char* env = std::getenv("ANNIHILATION_KINETICS_OUT");
    cfg.output.dir = env && *env ? env : "out";
  }
  if (!o.filter.empty()) cfg.validate.filter = o.filter;
  if (!o.restore.empty()) cfg.restore = o.restore;
  cfg.validate_all();
  return cfg;
}

class Output {
 public:
  Output(const RunConfig& cfg, std::string command)
      : cfg_(cfg), command_(std::move(command)), hash_(cfg.hash()), start_(std::chrono::steady_clock::now()) {
    fs::create_directories(cfg.output.dir);
  }

  const std::string& hash() const { return hash_; }

  void text(const std::string& name, const std::string& content) {
    std::ofstream out(fs::path(cfg_.output.dir) / name, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + name);
    files_.push_back(name);
  }
  void csv(const std::string& name, const std::string& content) { text(name, with_hash(content, hash_)); }
  void report(const std::string& name, json j) {
    j["config_hash"] = hash_;
    text(name, j.dump(2) + "\n");
  }

  void warn(const std::string& w) {
    std::cerr << "warning: " << w << '\n';
    warnings_.push_back(w);
  }

  void manifest(const std::vector<std::uint64_t>& seeds, bool partial) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json j = {{"command", command_},
              {"config_hash", hash_},
              {"config", cfg_.to_json()},
              {"seeds", seeds},
              {"versions", {{"annihilation", ANNIHILATION_VERSION}, {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                                                              std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                                                              std::to_string(EIGEN_MINOR_VERSION)}}},
              {"wall_time_seconds", wall},
              {"partial", partial},
              {"files", files_},
              {"warnings", warnings_}};
    std::ofstream out(fs::path(cfg_.output.dir) / "manifest.json", std::ios::binary);
    out << j.dump(2) << '\n';
  }

 private:
  const RunConfig& cfg_;
  std::string command_;
  std::string hash_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> files_;
  std::vector<std::string> warnings_;
};

SweepResult load_sweep(const std::string& dir, const std::string& hash) {
  const fs::path path = fs::path(dir) / "sweep.json";
  std::ifstream in(path);
  if (!in) throw ConfigError("--from: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("--from: " + path.string() + " is not valid JSON");
  }
  const std::string theirs = j.value("config_hash", "");
  if (theirs != hash)
    throw ConfigError("--from: " + path.string() + " was produced with config hash " + theirs +
                      ", refusing to combine it with config hash " + hash);
  return sweep_from_json(j);
}

void print_profile(const SteadyProfile& p) {
  std::cout << std::setprecision(6) << "alpha " << p.alpha << ": window [" << p.t_begin << ", " << p.t_end << "]"
            << (p.timed_out ? " (timed out)" : "") << ", M_2 = " << p.moments.at(HalfInt(4)) << " +- "
            << p.moments.error(HalfInt(4)) << ", a = " << p.coefficients.a << ", audits "
            << (all_pass(p.audits) ? "pass" : "FAIL") << '\n';
}

int cmd_validate(const RunConfig& cfg) {
  Output out(cfg, "validate");
  int failed = 0;
  const auto results = run_validation(cfg.validate, [&](const CheckResult& r, double secs) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  value " << std::setprecision(4) << r.value << " (bound "
              << r.threshold << ")  " << std::fixed << std::setprecision(2) << secs << " s" << std::defaultfloat;
    if (!r.detail.empty()) std::cout << "  " << r.detail;
    std::cout << std::endl;
    failed += r.pass ? 0 : 1;
  });
  json checks = json::array();
  for (const auto& r : results)
    checks.push_back({{"name", r.name}, {"pass", r.pass}, {"value", r.value}, {"threshold", r.threshold}, {"detail", r.detail}});
  out.report("validate.json", {{"checks", checks},
                               {"passed", static_cast<int>(results.size()) - failed},
                               {"failed", failed},
                               {"inject_fault", cfg.validate.inject_fault},
                               {"filter", cfg.validate.filter}});
  out.manifest({}, false);
  std::cout << results.size() - failed << "/" << results.size() << " checks passed\n";
  return failed == 0 ? kOk : kCheckFailure;
}

int cmd_simulate(const RunConfig& cfg) {
  Output out(cfg, "simulate");
  const SolverConfig& sc = cfg.study.solver;
  for (const auto& w : sc.warnings()) out.warn(w);
  ParticleEnsemble ens;
  if (!cfg.restore.empty()) {
    double alpha = 0.0;
    ens = read_checkpoint(cfg.restore, sc.d, &alpha);
    if (alpha != sc.alpha)
      throw ConfigError("restore: checkpoint was written with alpha = " + std::to_string(alpha) +
                        ", configuration has alpha = " + std::to_string(sc.alpha));
    if (ens.size() != sc.n_particles)
      throw ConfigError("restore: checkpoint holds " + std::to_string(ens.size()) + " particles, configuration has " +
                        std::to_string(sc.n_particles));
  } else {
    ens = init_ensemble(cfg.study.init, sc.n_particles, sc.d, sc.seed);
  }
  const SteadyProfile p = run_to_steady(ens, sc);
  print_profile(p);
  out.csv("timeseries.csv", time_series_csv(p.series));
  out.csv("histogram.csv", to_csv(p.histogram));
  json report = moment_report(p);
  report["histogram"] = to_json(p.histogram);
  out.report("profile.json", report);
  if (cfg.output.checkpoint) out.text("checkpoint.json", save_checkpoint(ens, sc.alpha));
  if (p.counters.majorant_overflows > 0)
    out.warn("majorant exceeded " + std::to_string(p.counters.majorant_overflows) + " time(s); v_maj was doubled");
  if (p.timed_out) out.warn("steady state not detected before t_max; profile averaged over one detection window");
  out.manifest({sc.seed}, p.timed_out);
  return p.timed_out ? kPartial : kOk;
}

void write_sweep(Output& out, const SweepResult& s) {
  out.report("sweep.json", to_json(s));
  out.csv("sweep.csv", sweep_csv(s));
}

std::vector<std::uint64_t> sweep_seeds(const SweepResult& s) {
  std::vector<std::uint64_t> seeds;
  for (const auto& r : s.rows) seeds.push_back(r.seed);
  return seeds;
}

int cmd_sweep(const RunConfig& cfg) {
  Output out(cfg, "sweep");
  const SweepResult s = boltzmann_limit_study(cfg.study);
  for (const auto& r : s.rows) print_profile(r.profile);
  std::cout << "noise floor " << s.floor.values.front() << ", Spearman " << s.spearman << ", fit slope " << s.fit.slope
            << ", correlation " << s.fit.correlation << '\n';
  write_sweep(out, s);
  out.manifest(sweep_seeds(s), s.partial);
  return s.partial ? kPartial : kOk;
}

int cmd_uniqueness(const RunConfig& cfg) {
  Output out(cfg, "uniqueness");
  const UniquenessVerdict v = uniqueness_study(cfg.study.uniqueness_alpha, cfg.study.uniqueness_inits, cfg.study);
  for (const auto& p : v.profiles) print_profile(p);
  for (std::size_t w = 0; w < v.weights.size(); ++w)
    std::cout << "weight " << v.weights[w].label() << ": distance " << v.distances[w] << ", 3 x error "
              << 3.0 * v.errors[w] << '\n';
  std::cout << "verdict: " << (v.pass ? "pass" : "fail") << '\n';
  out.report("uniqueness.json", to_json(v));
  out.csv("uniqueness.csv", uniqueness_csv(v));
  out.manifest(v.seeds, v.partial);
  return v.partial ? kPartial : kOk;
}

SweepResult sweep_for(Output& out, const RunConfig& cfg, const std::string& from) {
  if (!from.empty()) return load_sweep(from, out.hash());
  SweepResult s = boltzmann_limit_study(cfg.study);
  write_sweep(out, s);
  return s;
}

int cmd_tails(const RunConfig& cfg, const std::string& from) {
  Output out(cfg, "tails");
  const SweepResult s = sweep_for(out, cfg, from);
  const TailStudy t = tail_uniformity_study(s, cfg.study);
  for (const auto& r : t.rows)
    std::cout << r.label << " alpha " << r.alpha << ": A_est " << r.primary.A_est << " (k 2..6), "
              << r.secondary.A_est << " (k 3..8)\n";
  std::cout << "max/min A_est " << t.ratio << " (limit " << t.ratio_max << ")\n";
  out.report("tails.json", to_json(t));
  out.csv("tails.csv", tails_csv(t));
  out.manifest(sweep_seeds(s), s.partial);
  return s.partial ? kPartial : kOk;
}

int cmd_linearize(const RunConfig& cfg) {
  Output out(cfg, "linearize");
  const SpectrumStudy s = spectral_gap_study(cfg.study.spectral_sizes, cfg.study.solver.d, cfg.study.orders);
  bool partial = false;
  for (const auto& r : s.rows) {
    if (!r.ok) {
      out.warn("n = " + std::to_string(r.n) + ": " + r.error);
      partial = true;
      continue;
    }
    std::cout << "n " << r.n << ": kernel dimension " << r.kernel_dimension << ", nu " << r.nu << ", asymmetry "
              << r.asymmetry << '\n';
  }
  std::cout << "gap drift " << s.drift << '\n';
  out.report("spectrum.json", to_json(s));
  out.csv("spectrum.csv", spectrum_csv(s));
  out.manifest({}, partial);
  return partial ? kPartial : kOk;
}

int cmd_nonlinear(const RunConfig& cfg, const std::string& from) {
  Output out(cfg, "nonlinear");
  const SweepResult s = sweep_for(out, cfg, from);
  const NonlinearProbe p = nonlinear_estimate_probe(s, cfg.study);
  std::cout << "c1 " << p.c1 << ", c2 " << p.c2 << ", residuals within 3 sigma: " << (p.residuals_within ? "yes" : "no")
            << '\n';
  out.report("nonlinear.json", to_json(p));
  out.csv("nonlinear.csv", nonlinear_csv(p));
  out.manifest(sweep_seeds(s), s.partial);
  return s.partial ? kPartial : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-similar profiles of ballistic annihilation: kinetic operators, DSMC and studies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ANNIHILATION_VERSION);
  CommonOptions opts;

  auto* validate = app.add_subcommand("validate", "Run the fast invariant checks");
  add_common(validate, opts);
  validate->add_option("--filter", opts.filter, "Run only checks whose name contains this text");
  auto* simulate = app.add_subcommand("simulate", "Run the particle solver to a steady profile");
  add_common(simulate, opts);
  simulate->add_option("--restore", opts.restore, "Continue from a checkpoint file");
  auto* sweep = app.add_subcommand("sweep", "Distance to the Maxwellian across alpha");
  add_common(sweep, opts);
  auto* uniq = app.add_subcommand("uniqueness", "Compare steady profiles from different initial data");
  add_common(uniq, opts);
  auto* tails = app.add_subcommand("tails", "Tail-rate estimates across alpha");
  add_common(tails, opts);
  tails->add_option("--from", opts.from, "Reuse sweep.json from this directory");
  auto* lin = app.add_subcommand("linearize", "Spectrum of the linearized operator");
  add_common(lin, opts);
  auto* nonlin = app.add_subcommand("nonlinear", "Fit of the nonlinear distance estimate");
  add_common(nonlin, opts);
  nonlin->add_option("--from", opts.from, "Reuse sweep.json from this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    const RunConfig cfg = build_config(opts);
    if (*validate) return cmd_validate(cfg);
    if (*simulate) return cmd_simulate(cfg);
    if (*sweep) return cmd_sweep(cfg);
    if (*uniq) return cmd_uniqueness(cfg);
    if (*tails) return cmd_tails(cfg, opts.from);
    if (*lin) return cmd_linearize(cfg);
    if (*nonlin) return cmd_nonlinear(cfg, opts.from);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailure;
  }
  return kCheckFailure;
}
