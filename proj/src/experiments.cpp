#include "annihilation/experiments.hpp"

#include "annihilation/kinematics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace annihilation {

using Eigen::Index;

std::string WeightPair::label() const {
  std::ostringstream os;
  os << "a" << a << "_k" << k;
  return os.str();
}

void StudyConfig::validate() const {
  solver.validate();
  init.validate();
  const double a0 = alpha_thresholds(solver.d).alpha0;
  if (alphas.empty()) throw ConfigError("study: alphas must not be empty");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] >= 0.0 && alphas[i] < a0))
      throw ConfigError("study: every alpha must lie in [0, alpha0(d)) = [0, " + std::to_string(a0) + ")");
    if (i > 0 && !(alphas[i] > alphas[i - 1])) throw ConfigError("study: alphas must be strictly increasing");
  }
  if (weights.empty()) throw ConfigError("study: at least one distance weight is required");
  for (const auto& w : weights)
    if (!(w.a >= 0.0 && w.a <= 1.0 && w.k >= 0.0)) throw ConfigError("study: weights need 0 <= a <= 1 and k >= 0");
  if (!(nonlinear_weight.a >= 0.0 && nonlinear_weight.a <= 1.0 && nonlinear_weight.k >= 0.0))
    throw ConfigError("study: nonlinear_weight needs 0 <= a <= 1 and k >= 0");
  if (floor_particles < kMinParticles) throw ConfigError("study: floor_particles must be >= 1000");
  if (floor_replicas < 1) throw ConfigError("study: floor_replicas must be >= 1");
  if (!(uniqueness_alpha >= 0.0 && uniqueness_alpha < a0)) throw ConfigError("study: uniqueness_alpha out of range");
  if (uniqueness_inits.size() < 2) throw ConfigError("study: uniqueness needs at least two inits");
  for (const auto& i : uniqueness_inits) i.validate();
  for (Index n : spectral_sizes)
    if (n < 8 || n > kMaxLinearizedNodes) throw ConfigError("study: spectral sizes must lie in [8, 128]");
  orders.validate();
  if (!(tail_ratio_max >= 1.0)) throw ConfigError("study: tail_ratio_max must be >= 1");
  if (!(tail_stability > 0.0)) throw ConfigError("study: tail_stability must be > 0");
  if (workers < 1) throw ConfigError("study: workers must be >= 1");
}

namespace {

// Runs the jobs on up to `workers` threads; results are stored by index.
std::vector<SteadyProfile> run_profiles(const std::vector<std::pair<SolverConfig, InitSpec>>& jobs, int workers) {
  std::vector<SteadyProfile> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        out[i] = run_to_steady(jobs[i].first, jobs[i].second);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

bool residuals_within(const SteadyProfile& p) {
  return std::all_of(p.residuals.begin(), p.residuals.end(),
                     [](const ParticleBalance& b) { return std::abs(b.residual) <= 3.0 * b.residual_error; });
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    for (std::size_t q = i; q <= j; ++q) r[idx[q]] = 0.5 * (i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

}  // namespace

// ---------------------------------------------------------------- floor

NoiseFloor noise_floor(int d, Index n_particles, Index n_bins, const std::vector<WeightPair>& weights, int replicas,
                       std::uint64_t seed) {
  if (replicas < 1) throw ConfigError("noise_floor: replicas must be >= 1");
  NoiseFloor nf;
  nf.n_particles = n_particles;
  nf.n_bins = n_bins > 0 ? n_bins : default_bin_count(n_particles);
  nf.replicas = replicas;
  nf.weights = weights;
  const RadialBinning binning = maxwellian_binning(d, nf.n_bins);
  const Histogram exact = maxwellian_histogram(binning);
  std::vector<std::vector<double>> vals(weights.size());
  for (int r = 0; r < replicas; ++r) {
    const ParticleEnsemble e =
        init_ensemble(InitSpec{InitKind::maxwellian}, n_particles, d, Rng::derive_seed(seed, 0xF100 + r));
    const Histogram h = histogram(e.velocities, binning);
    for (std::size_t w = 0; w < weights.size(); ++w)
      vals[w].push_back(weighted_distance(h, exact, weights[w].a, weights[w].k).value);
  }
  for (const auto& v : vals) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    nf.values.push_back(m);
    nf.spreads.push_back(v.size() > 1 ? std::sqrt(s / (v.size() - 1)) : 0.0);
  }
  return nf;
}

// ----------------------------------------------------------- statistics

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("linear_fit: need two or more points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.correlation = sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
  return f;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return linear_fit(ranks(x), ranks(y)).correlation;
}

// ---------------------------------------------------------------- sweep

namespace {

SweepRow make_row(double alpha, std::uint64_t seed, SteadyProfile profile, const StudyConfig& cfg,
                  const NoiseFloor& floor) {
  SweepRow row;
  row.alpha = alpha;
  row.seed = seed;
  const Histogram exact = maxwellian_histogram(profile.histogram.binning);
  for (std::size_t w = 0; w < cfg.weights.size(); ++w) {
    row.distances.push_back(weighted_distance(profile.histogram, exact, cfg.weights[w].a, cfg.weights[w].k));
    row.floor_subtracted.push_back(row.distances.back().value - floor.values[w]);
  }
  row.audits_pass = all_pass(profile.audits);
  row.residuals_pass = residuals_within(profile);
  row.profile = std::move(profile);
  return row;
}

void summarize(SweepResult& s) {
  std::vector<double> xs, ys;
  for (const auto& r : s.rows) {
    s.partial = s.partial || r.profile.timed_out;
    if (r.alpha > 0.0) {
      xs.push_back(r.alpha);
      ys.push_back(r.floor_subtracted.front());
    } else {
      s.control_at_floor = r.distances.front().value <= 2.0 * s.floor.values.front();
    }
  }
  if (xs.size() >= 2) {
    s.fit = linear_fit(xs, ys);
    s.spearman = spearman(xs, ys);
  }
}

}  // namespace

SweepResult boltzmann_limit_study(const StudyConfig& cfg) {
  cfg.validate();
  SweepResult s;
  s.d = cfg.solver.d;
  s.alphas = cfg.alphas;
  s.weights = cfg.weights;
  const Index n_bins = cfg.solver.n_bins > 0 ? cfg.solver.n_bins : default_bin_count(cfg.solver.n_particles);
  s.floor = noise_floor(cfg.solver.d, cfg.floor_particles, n_bins, cfg.weights, cfg.floor_replicas, cfg.solver.seed);

  std::vector<std::pair<SolverConfig, InitSpec>> jobs;
  for (std::size_t i = 0; i < cfg.alphas.size(); ++i) {
    SolverConfig sc = cfg.solver;
    sc.alpha = cfg.alphas[i];
    sc.seed = Rng::derive_seed(cfg.solver.seed, i);
    jobs.emplace_back(sc, cfg.init);
  }
  auto profiles = run_profiles(jobs, cfg.workers);
  for (std::size_t i = 0; i < profiles.size(); ++i)
    s.rows.push_back(make_row(cfg.alphas[i], jobs[i].first.seed, std::move(profiles[i]), cfg, s.floor));
  summarize(s);
  return s;
}

// ----------------------------------------------------------- uniqueness

namespace {

UniquenessVerdict compare_profiles(double alpha, std::vector<std::string> labels, std::vector<std::uint64_t> seeds,
                                   std::vector<SteadyProfile> profiles, const StudyConfig& cfg) {
  UniquenessVerdict v;
  v.alpha = alpha;
  v.inits = std::move(labels);
  v.seeds = std::move(seeds);
  v.weights = cfg.weights;
  v.pass = true;
  for (const auto& w : cfg.weights) {
    double worst_ratio = -1.0, dist = 0.0, err = 0.0;
    for (std::size_t i = 0; i < profiles.size(); ++i)
      for (std::size_t j = i + 1; j < profiles.size(); ++j) {
        const WeightedDistance wd = weighted_distance(profiles[i].histogram, profiles[j].histogram, w.a, w.k);
        const double ratio = wd.error > 0.0 ? wd.value / wd.error : (wd.value > 0.0 ? 1e300 : 0.0);
        if (ratio > worst_ratio) {
          worst_ratio = ratio;
          dist = wd.value;
          err = wd.error;
        }
      }
    v.distances.push_back(dist);
    v.errors.push_back(err);
    v.pass = v.pass && dist <= 3.0 * err;
  }
  for (const auto& p : profiles) v.partial = v.partial || p.timed_out;
  v.profiles = std::move(profiles);
  return v;
}

}  // namespace

UniquenessVerdict uniqueness_study(double alpha, const std::vector<InitSpec>& inits, const StudyConfig& cfg) {
  cfg.validate();
  if (inits.size() < 2) throw ConfigError("uniqueness_study: need at least two inits");
  const double top = *std::max_element(cfg.alphas.begin(), cfg.alphas.end());
  if (!(alpha >= 0.0 && alpha <= top)) throw ConfigError("uniqueness_study: alpha must lie within the sweep range");
  std::vector<std::pair<SolverConfig, InitSpec>> jobs;
  std::vector<std::string> labels;
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < inits.size(); ++i) {
    SolverConfig sc = cfg.solver;
    sc.alpha = alpha;
    sc.seed = Rng::derive_seed(cfg.solver.seed, 1000 + i);
    jobs.emplace_back(sc, inits[i]);
    labels.push_back(inits[i].str());
    seeds.push_back(sc.seed);
  }
  return compare_profiles(alpha, labels, seeds, run_profiles(jobs, cfg.workers), cfg);
}

UniquenessVerdict reproducibility_control(double alpha, const InitSpec& init, const StudyConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<SolverConfig, InitSpec>> jobs;
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 2; ++i) {
    SolverConfig sc = cfg.solver;
    sc.alpha = alpha;
    sc.seed = Rng::derive_seed(cfg.solver.seed, 2000 + i);
    jobs.emplace_back(sc, init);
    seeds.push_back(sc.seed);
  }
  return compare_profiles(alpha, {init.str(), init.str()}, seeds, run_profiles(jobs, cfg.workers), cfg);
}

// ---------------------------------------------------------------- tails

MomentVector maxwellian_moments(int d, HalfInt k_max) {
  MomentVector mv;
  for (int tw = 0; tw <= k_max.twice(); ++tw) {
    const double k = 0.5 * tw;
    mv.entries[HalfInt(tw)] = std::exp(std::lgamma(k + 0.5 * d) - std::lgamma(0.5 * d));
    mv.errors[HalfInt(tw)] = 0.0;
  }
  return mv;
}

namespace {

TailRow tail_row(std::string label, double alpha, const MomentVector& ms, double stability) {
  TailRow r;
  r.label = std::move(label);
  r.alpha = alpha;
  r.primary = tail_estimate(ms, 2, 6);
  r.secondary = tail_estimate(ms, 3, 8);
  r.stable = std::abs(r.primary.A_est - r.secondary.A_est) <= stability * std::max(r.primary.A_est, r.secondary.A_est);
  return r;
}

}  // namespace

TailStudy tail_uniformity_study(const SweepResult& sweep, const StudyConfig& cfg) {
  TailStudy t;
  t.ratio_max = cfg.tail_ratio_max;
  t.rows.push_back(tail_row("maxwellian", 0.0, maxwellian_moments(sweep.d, HalfInt(10)), cfg.tail_stability));
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  double lo2 = lo, hi2 = 0.0;
  t.all_positive = true;
  for (const auto& r : sweep.rows) {
    TailRow row = tail_row("dsmc", r.alpha, r.profile.moments, cfg.tail_stability);
    t.all_positive = t.all_positive && row.primary.A_est > 0.0 && std::isfinite(row.primary.A_est);
    t.noisy = t.noisy || row.primary.noisy || row.secondary.noisy;
    lo = std::min(lo, row.primary.A_est);
    hi = std::max(hi, row.primary.A_est);
    lo2 = std::min(lo2, row.secondary.A_est);
    hi2 = std::max(hi2, row.secondary.A_est);
    t.rows.push_back(std::move(row));
  }
  t.ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  t.ratio_secondary = lo2 > 0.0 ? hi2 / lo2 : std::numeric_limits<double>::infinity();
  t.pass = t.all_positive && t.ratio <= t.ratio_max;
  return t;
}

TailStudy tail_uniformity_study(const StudyConfig& cfg) { return tail_uniformity_study(boltzmann_limit_study(cfg), cfg); }

// ------------------------------------------------------------- spectrum

SpectrumStudy spectral_gap_study(const std::vector<Index>& sizes, int d, const GainOrders& orders) {
  if (sizes.empty()) throw ConfigError("spectral_gap_study: no grid sizes");
  SpectrumStudy s;
  for (Index n : sizes) {
    if (n < 8 || n > kMaxLinearizedNodes) throw ConfigError("spectral_gap_study: sizes must lie in [8, 128]");
    SpectrumRow row;
    row.n = n;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const LinearizedMatrix mat = assemble_linearized(RadialGrid::make(d, n), orders);
      row.eigenvalues = spectrum(mat);
      row.asymmetry = relative_asymmetry(mat);
      std::vector<std::complex<double>> by_abs = row.eigenvalues;
      std::sort(by_abs.begin(), by_abs.end(),
                [](const auto& a, const auto& b) { return std::abs(a) < std::abs(b); });
      row.null_max = std::abs(by_abs[1]);
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 2; i < by_abs.size(); ++i) top = std::max(top, by_abs[i].real());
      row.nu = -top;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    s.rows.push_back(std::move(row));
  }
  double tol = 0.0;
  if (s.rows.size() >= 2 && s.rows.back().ok && s.rows[s.rows.size() - 2].ok) {
    const double a = s.rows.back().nu, b = s.rows[s.rows.size() - 2].nu;
    s.drift = std::abs(a - b) / std::abs(a);
    tol = 10.0 * std::abs(a - b);
  }
  s.pass = true;
  for (auto& row : s.rows) {
    if (!row.ok) {
      s.pass = false;
      continue;
    }
    row.kernel_tolerance = tol > 0.0 ? tol : 1e-3 * std::abs(row.nu);
    row.kernel_dimension = static_cast<int>(std::count_if(row.eigenvalues.begin(), row.eigenvalues.end(),
                                                          [&](const auto& l) { return std::abs(l) <= row.kernel_tolerance; }));
    s.pass = s.pass && row.kernel_dimension == 2 && row.nu > 0.0;
  }
  s.pass = s.pass && s.drift <= 0.1;
  return s;
}

// ------------------------------------------------------------ nonlinear

NonlinearProbe nonlinear_estimate_probe(const SweepResult& sweep, const StudyConfig& cfg) {
  NonlinearProbe p;
  p.weight = cfg.nonlinear_weight;
  std::vector<double> xs, ys;
  for (const auto& r : sweep.rows) {
    const Histogram exact = maxwellian_histogram(r.profile.histogram.binning);
    const WeightedDistance wd = weighted_distance(r.profile.histogram, exact, p.weight.a, p.weight.k);
    p.rows.push_back({r.alpha, wd.value, wd.error, 0.0, 0.0, false});
    xs.push_back(r.alpha);
    ys.push_back(wd.value);
  }
  // Least squares for D = c1 D^2 + c2 alpha.
  double s11 = 0.0, s12 = 0.0, s22 = 0.0, t1 = 0.0, t2 = 0.0;
  for (const auto& r : p.rows) {
    const double x1 = r.D * r.D, x2 = r.alpha;
    s11 += x1 * x1;
    s12 += x1 * x2;
    s22 += x2 * x2;
    t1 += x1 * r.D;
    t2 += x2 * r.D;
  }
  const double det = s11 * s22 - s12 * s12;
  if (std::abs(det) > 1e-300) {
    p.c1 = (t1 * s22 - t2 * s12) / det;
    p.c2 = (s11 * t2 - s12 * t1) / det;
  }
  p.residuals_within = true;
  for (auto& r : p.rows) {
    r.fitted = p.c1 * r.D * r.D + p.c2 * r.alpha;
    r.residual = r.D - r.fitted;
    r.within = std::abs(r.residual) <= 3.0 * r.D_error;
    p.residuals_within = p.residuals_within && r.within;
  }
  if (xs.size() >= 2) p.linear = linear_fit(xs, ys);
  return p;
}

NonlinearProbe nonlinear_estimate_probe(const StudyConfig& cfg) {
  return nonlinear_estimate_probe(boltzmann_limit_study(cfg), cfg);
}

}  // namespace annihilation
