// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "annihilation/experiments.hpp"
#include "annihilation/kinematics.hpp"
#include "annihilation/random.hpp"
#include "annihilation/validation.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace annihilation;
using Eigen::VectorXd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double budget_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_budget = secs <= budget_seconds;
  const bool pass = o.pass && in_budget;
  if (!pass) ++failures;
  std::cout << (pass ? "PASS" : "FAIL") << " #" << id << " " << name << ": " << o.detail << " [" << std::fixed
            << std::setprecision(1) << secs << " s of " << budget_seconds << " s"
            << (in_budget ? "" : ", over budget") << "]" << std::defaultfloat << std::endl;
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream os;
  os << std::setprecision(digits) << x;
  return os.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = "\"" ANNIHILATION_KINETICS_BIN "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Compares every file except the manifest, which records wall time.
bool same_outputs(const fs::path& a, const fs::path& b, std::string& note) {
  int compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const std::string name = e.path().filename().string();
    if (name == "manifest.json") continue;
    if (!fs::exists(b / name) || slurp(e.path()) != slurp(b / name)) {
      note = name + " differs";
      return false;
    }
    ++compared;
  }
  note = std::to_string(compared) + " files identical";
  return compared > 0;
}

}  // namespace

int main() {
  const int workers = static_cast<int>(std::clamp(std::thread::hardware_concurrency(), 1u, 5u));

  criterion(1, "Povzner anchor", 1.0, [] {
    const double rho = povzner_coefficient(3, HalfInt(3));
    const double a0 = alpha_thresholds(3).alpha0;
    const bool ok = std::abs(rho - 0.8) <= 1e-10 && std::abs(a0 - 2.0 / 7.0) <= 1e-10;
    return Outcome{ok, "rho_3/2 = " + fmt(rho, 15) + ", alpha0 = " + fmt(a0, 15)};
  });

  criterion(2, "kinematic conservation", 5.0, [] {
    Rng rng(2024);
    double worst = 0.0;
    for (int d : {2, 3, 4})
      for (int i = 0; i < 100'000; ++i) {
        VectorXd v(d), w(d);
        for (int c = 0; c < d; ++c) v[c] = 3.0 * rng.normal(), w[c] = 3.0 * rng.normal();
        const auto [vp, wp] = post_collision(v, w, random_unit_vector(rng, d));
        const double p = std::max((v + w).norm(), 1.0), e = v.squaredNorm() + w.squaredNorm();
        worst = std::max({worst, (vp + wp - v - w).norm() / p,
                          std::abs(vp.squaredNorm() + wp.squaredNorm() - e) / e});
      }
    return Outcome{worst <= 1e-12, "worst relative defect " + fmt(worst)};
  });

  criterion(3, "equilibrium and collisional identities", 120.0, [] {
    const RadialGrid g = RadialGrid::make(3, 48, 6.0);
    const RadialDistribution m = maxwellian(g);
    const VectorXd gain = gain_nodes(m, m);
    const VectorXd loss = m.values.cwiseProduct(loss_intensity_nodes(m));
    const double eq = (gain - loss).cwiseAbs().maxCoeff() / std::max(gain.cwiseAbs().maxCoeff(), loss.maxCoeff());
    double worst = 0.0;
    for (const auto& name : test_density_names()) {
      const RadialDistribution f = test_density(g, name);
      const VectorXd gp = gain_nodes(f, f);
      const VectorXd lm = f.values.cwiseProduct(loss_intensity_nodes(f));
      const VectorXd r2 = g.nodes.cwiseAbs2();
      const double lmass = g.weights.dot(lm), lenergy = g.weights.dot(lm.cwiseProduct(r2));
      worst = std::max({worst, std::abs(g.weights.dot(gp) - lmass) / lmass,
                        std::abs(g.weights.dot(gp.cwiseProduct(r2)) - lenergy) / lenergy});
    }
    return Outcome{eq <= 5e-3 && worst <= 1e-2,
                   "equilibrium " + fmt(eq) + " (<= 0.005), identities " + fmt(worst) + " (<= 0.01) on 3 densities"};
  });

  criterion(4, "Carleman oracle equivalence", 300.0, [] {
    const RadialGrid g = RadialGrid::make(3, 48);
    double worst = 0.0;
    std::uint64_t seed = 4000;
    for (const RadialDistribution& f : {maxwellian(g), test_density(g, "bimodal")})
      for (double r : {0.25, 0.75, 1.25, 2.0, 3.0}) {
        const MonteCarloEstimate mc = gain_carleman_mc(f, f, r, 1'000'000, seed++);
        worst = std::max(worst, std::abs(mc.value - gain(f, f, r)) / mc.std_error);
      }
    return Outcome{worst <= 3.0, "worst deviation " + fmt(worst) + " standard errors over 5 radii x 2 densities"};
  });

  // Criteria 5, 6, 7, 9 and 10 share one sweep at the default study configuration.
  StudyConfig study;
  study.workers = workers;
  SweepResult sweep;
  double sweep_seconds = 0.0;
  {
    const auto start = std::chrono::steady_clock::now();
    try {
      sweep = boltzmann_limit_study(study);
    } catch (const std::exception& e) {
      std::cout << "sweep failed: " << e.what() << std::endl;
    }
    sweep_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "sweep over " << sweep.rows.size() << " alphas took " << fmt(sweep_seconds, 3) << " s with "
              << workers << " worker(s)" << std::endl;
  }
  const auto converged = [&](const SweepRow& r) { return !r.profile.timed_out; };

  criterion(5, "elastic DSMC limit", 300.0 - sweep_seconds / sweep.rows.size(), [&] {
    if (sweep.rows.empty() || sweep.rows.front().alpha != 0.0) return Outcome{false, "no alpha = 0 run"};
    const SweepRow& r = sweep.rows.front();
    const double m2 = r.profile.moments.at(HalfInt::whole(2)), se = r.profile.moments.error(HalfInt::whole(2));
    bool ok = converged(r) && std::abs(m2 - 3.75) <= 3.0 * se;
    std::string d = "M_2 = " + fmt(m2, 6) + " +- " + fmt(se, 2);
    for (std::size_t w = 0; w < sweep.weights.size(); ++w) {
      ok = ok && r.distances[w].value <= 2.0 * sweep.floor.values[w];
      d += ", D_" + sweep.weights[w].label() + " " + fmt(r.distances[w].value, 3) + " vs floor " +
           fmt(sweep.floor.values[w], 3);
    }
    return Outcome{ok, d};
  });

  criterion(6, "a priori bound audit", 1200.0 - sweep_seconds, [&] {
    const RadialDistribution m = maxwellian(RadialGrid::make(3, 48));
    bool ok = all_pass(audit_bounds(moments_of(m, HalfInt(3)), coefficients(m, 0.0), 3));
    std::string d = std::string("Maxwellian ") + (ok ? "pass" : "fail");
    int checked = 0;
    for (const auto& r : sweep.rows) {
      if (r.alpha == 0.0) continue;
      ++checked;
      const bool p = converged(r) && all_pass(r.profile.audits);
      ok = ok && p;
      d += ", alpha " + fmt(r.alpha) + (p ? " pass" : " fail");
    }
    return Outcome{ok && checked == 4, d};
  });

  criterion(7, "Boltzmann-limit trend", 1200.0 - sweep_seconds, [&] {
    const bool ok = !sweep.partial && sweep.spearman >= 0.8 && sweep.control_at_floor;
    return Outcome{ok, "Spearman " + fmt(sweep.spearman) + " (>= 0.8), slope " + fmt(sweep.fit.slope) +
                           ", correlation " + fmt(sweep.fit.correlation) + ", control at floor " +
                           (sweep.control_at_floor ? "yes" : "no")};
  });

  criterion(8, "uniqueness at alpha = 0.05", 900.0, [&] {
    const UniquenessVerdict v = uniqueness_study(0.05, study.uniqueness_inits, study);
    std::string d;
    for (std::size_t w = 0; w < v.weights.size(); ++w)
      d += (w ? ", " : "") + v.weights[w].label() + " " + fmt(v.distances[w], 3) + " <= " + fmt(3.0 * v.errors[w], 3);
    return Outcome{v.pass && !v.partial, d};
  });

  criterion(9, "steady moment balance", 1200.0 - sweep_seconds, [&] {
    bool ok = !sweep.rows.empty();
    double worst = 0.0;
    for (const auto& r : sweep.rows) {
      if (!converged(r)) continue;
      for (const auto& b : r.profile.residuals) {
        const double z = std::abs(b.residual) / b.residual_error;
        worst = std::max(worst, z);
        ok = ok && z <= 3.0;
      }
    }
    return Outcome{ok, "worst |residual| / error " + fmt(worst) + " at k = 1/2, 3/2, 2 over all runs"};
  });

  criterion(10, "tail uniformity", 1200.0 - sweep_seconds, [&] {
    const TailStudy t = tail_uniformity_study(sweep, study);
    double lo = INFINITY, hi = 0.0;
    bool positive = true;
    for (const auto& r : t.rows) {
      if (r.label == "maxwellian") continue;
      positive = positive && r.primary.A_est > 0.0 && std::isfinite(r.primary.A_est);
      lo = std::min(lo, r.primary.A_est);
      hi = std::max(hi, r.primary.A_est);
    }
    const double ratio = hi / lo;
    return Outcome{positive && ratio <= 2.0, "A_est in [" + fmt(lo) + ", " + fmt(hi) + "], ratio " + fmt(ratio) +
                                                 " (k 3..8 window: ratio " + fmt(t.ratio_secondary) + ")"};
  });

  criterion(11, "linearized spectrum", 600.0, [] {
    const SpectrumStudy s = spectral_gap_study({48, 96});
    bool ok = s.rows.size() == 2 && s.drift <= 0.1;
    std::string d;
    for (const auto& r : s.rows) {
      ok = ok && r.ok && r.kernel_dimension == 2 && r.nu > 0.0;
      d += "n=" + std::to_string(r.n) + " kernel " + std::to_string(r.kernel_dimension) + " nu " + fmt(r.nu) + "; ";
    }
    return Outcome{ok, d + "drift " + fmt(s.drift)};
  });

  criterion(12, "determinism", 120.0, [] {
    const fs::path base = fs::temp_directory_path() / "annihilation_acceptance_determinism";
    fs::remove_all(base);
    const std::string small =
        " --workers 1 --set solver.n_particles=4000 --set solver.detection_window=5 --set solver.min_average_time=10"
        " --set solver.sub_windows=8 --set solver.snapshot_pairs=20000";
    const std::string sweep_small = small + " --set study.alphas=[0,0.05] --set study.floor_particles=4000"
                                            " --set study.floor_replicas=2";
    const std::vector<std::pair<std::string, std::string>> commands{
        {"validate", "validate --filter povzner"},
        {"simulate", "simulate --set solver.alpha=0.05" + small},
        {"sweep", "sweep" + sweep_small},
        {"linearize", "linearize --set study.spectral_sizes=[24]"}};
    std::string d;
    bool ok = true;
    for (const auto& [name, args] : commands) {
      const fs::path a = base / (name + "_1"), b = base / (name + "_2");
      const int ca = run_cli(args + " --out " + a.string()), cb = run_cli(args + " --out " + b.string());
      std::string note;
      const bool same = ca == 0 && cb == 0 && same_outputs(a, b, note);
      ok = ok && same;
      d += (d.empty() ? "" : "; ") + name + ": " + (same ? note : "exit " + std::to_string(ca) + "/" + std::to_string(cb) + " " + note);
    }
    fs::remove_all(base);
    return Outcome{ok, d};
  });

  std::cout << (failures == 0 ? "all 12 criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
