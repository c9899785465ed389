#include "annihilation/dsmc.hpp"

#include "annihilation/kinematics.hpp"
#include "annihilation/quadrature.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <regex>
#include <sstream>

namespace annihilation {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// --------------------------------------------------------------- init

InitSpec InitSpec::parse(const std::string& text) {
  static const std::regex shells(R"(\s*two_shells\s*\(\s*([^,\s]+)\s*,\s*([^,\s]+)\s*,\s*([^,\s\)]+)\s*\)\s*)");
  InitSpec s;
  std::smatch m;
  if (text == "maxwellian") {
    s.kind = InitKind::maxwellian;
  } else if (text == "uniform_ball") {
    s.kind = InitKind::uniform_ball;
  } else if (text == "two_shells") {
    s.kind = InitKind::two_shells;
  } else if (std::regex_match(text, m, shells)) {
    s.kind = InitKind::two_shells;
    try {
      s.r1 = std::stod(m[1]);
      s.r2 = std::stod(m[2]);
      s.p = std::stod(m[3]);
    } catch (const std::exception&) {
      throw ValidationError("init: cannot parse two_shells parameters in '" + text + "'");
    }
  } else {
    throw ValidationError("init: unknown kind '" + text + "'");
  }
  s.validate();
  return s;
}

std::string InitSpec::str() const {
  switch (kind) {
    case InitKind::maxwellian: return "maxwellian";
    case InitKind::uniform_ball: return "uniform_ball";
    case InitKind::two_shells: {
      std::ostringstream os;
      os << "two_shells(" << r1 << ',' << r2 << ',' << p << ')';
      return os.str();
    }
  }
  return "?";
}

void InitSpec::validate() const {
  if (kind != InitKind::two_shells) return;
  if (!(r1 >= 0.0) || !(r2 >= 0.0) || !std::isfinite(r1) || !std::isfinite(r2))
    throw ValidationError("two_shells: radii must be finite and >= 0");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("two_shells: p must lie in [0, 1]");
  const double energy = p * r1 * r1 + (1.0 - p) * r2 * r2;
  if (!(energy > 0.0)) throw ValidationError("two_shells: the law is concentrated at the origin");
}

void renormalize(MatrixXd& velocities) {
  const Index n = velocities.cols();
  const int d = static_cast<int>(velocities.rows());
  if (n == 0) throw ValidationError("renormalize: empty ensemble");
  const VectorXd mean = velocities.rowwise().mean();
  velocities.colwise() -= mean;
  const double energy = velocities.squaredNorm() / n;
  if (!(energy > 0.0) || !std::isfinite(energy)) throw ValidationError("renormalize: degenerate ensemble");
  velocities *= std::sqrt(0.5 * d / energy);
}

ParticleEnsemble init_ensemble(const InitSpec& init, Index n_particles, int d, std::uint64_t seed) {
  init.validate();
  if (n_particles < kMinParticles) throw ValidationError("init_ensemble: need at least 1000 particles");
  if (d < 2) throw ValidationError("init_ensemble: d must be >= 2");
  ParticleEnsemble e;
  e.d = d;
  e.rng = Rng(seed);
  e.velocities.resize(d, n_particles);
  for (Index i = 0; i < n_particles; ++i) {
    switch (init.kind) {
      case InitKind::maxwellian:
        for (int c = 0; c < d; ++c) e.velocities(c, i) = std::sqrt(0.5) * e.rng.normal();
        break;
      case InitKind::uniform_ball:
        e.velocities.col(i) = random_unit_vector(e.rng, d) * std::pow(e.rng.uniform(), 1.0 / d);
        break;
      case InitKind::two_shells: {
        const double r = e.rng.uniform() < init.p ? init.r1 : init.r2;
        e.velocities.col(i) = random_unit_vector(e.rng, d) * r;
        break;
      }
    }
  }
  renormalize(e.velocities);
  return e;
}

// ------------------------------------------------------------- config

void SolverConfig::validate() const {
  const auto fail = [](const std::string& what) { throw ConfigError("solver: " + what); };
  if (d < 2 || d > 8) fail("d must lie in [2, 8]");
  if (n_particles < kMinParticles) fail("n_particles must be >= 1000");
  if (!(alpha >= 0.0 && alpha < 1.0)) fail("alpha must lie in [0, 1)");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt must be > 0");
  if (!(oversampling >= 1.0)) fail("oversampling must be >= 1");
  if (!(v_maj >= 0.0)) fail("v_maj must be >= 0 (0 selects it automatically)");
  if (!(detection_window >= 8 * dt)) fail("detection_window must span at least 8 steps");
  if (!(detection_tolerance > 0.0)) fail("detection_tolerance must be > 0");
  if (!(min_average_time > 0.0)) fail("min_average_time must be > 0");
  if (!(t_max >= detection_window)) fail("t_max must be >= detection_window");
  if (sub_windows < 8) fail("sub_windows must be >= 8");
  if (snapshots_per_sub_window < 1) fail("snapshots_per_sub_window must be >= 1");
  if (snapshot_pairs < 1000) fail("snapshot_pairs must be >= 1000");
  if (n_bins < 0 || n_bins == 1) fail("n_bins must be 0 (automatic) or >= 2");
  if (series_every < 1) fail("series_every must be >= 1");
}

std::vector<std::string> SolverConfig::warnings() const {
  std::vector<std::string> out;
  const double a0 = alpha_thresholds(d).alpha0;
  if (alpha >= a0) {
    std::ostringstream os;
    os << "alpha = " << alpha << " is at or above alpha0(" << d << ") = " << a0
       << "; the moment bounds behind the steady profile are not guaranteed";
    out.push_back(os.str());
  }
  return out;
}

// --------------------------------------------------------------- step

StepStats step(ParticleEnsemble& ens, const SolverConfig& cfg) {
  const Index n = ens.size();
  const int d = ens.d;
  if (n < 3 || ens.velocities.rows() != d) throw ValidationError("step: malformed ensemble");
  if (!(ens.v_maj > 0.0)) ens.v_maj = cfg.v_maj > 0.0 ? cfg.v_maj : 2.0 * ens.velocities.colwise().norm().maxCoeff();

  // Velocities are v = s (u - m) with u stored in place.
  MatrixXd& u = ens.velocities;
  VectorXd s1 = u.rowwise().sum();
  double s2 = u.squaredNorm();
  double scale = 1.0;
  VectorXd shift = VectorXd::Zero(d);
  const double target = 0.5 * d;

  StepStats st;
  double v_eff = cfg.oversampling * ens.v_maj;
  const double expected = 0.5 * (n - 1) * v_eff * cfg.dt + ens.candidate_carry;
  const auto n_cand = static_cast<std::int64_t>(std::floor(expected));
  ens.candidate_carry = expected - static_cast<double>(n_cand);
  double b_sum = 0.0;
  Rng& rng = ens.rng;

  for (std::int64_t c = 0; c < n_cand; ++c) {
    const Index i = static_cast<Index>(rng.index(n));
    Index j = static_cast<Index>(rng.index(n - 1));
    if (j >= i) ++j;
    const double g = scale * (u.col(i) - u.col(j)).norm();
    if (g > v_eff) {
      ++st.majorant_overflows;
      while (v_eff < g) {
        v_eff *= 2.0;
        ens.v_maj *= 2.0;
      }
    } else if (rng.uniform() * v_eff >= g) {
      continue;
    }
    ++st.accepted;
    b_sum += 0.5 * scale * scale * ((u.col(i) - shift).squaredNorm() + (u.col(j) - shift).squaredNorm());

    if (cfg.alpha > 0.0 && rng.uniform() < cfg.alpha) {
      ++st.annihilations;
      if (2 * st.annihilations >= n)
        throw NumericalError("step: the whole population was annihilated within one step; reduce alpha * dt");
      s1 -= u.col(i) + u.col(j);
      s2 -= u.col(i).squaredNorm() + u.col(j).squaredNorm();
      for (Index slot : {i, j}) {
        Index k = static_cast<Index>(rng.index(n - 2));
        if (k >= std::min(i, j)) ++k;
        if (k >= std::max(i, j)) ++k;
        u.col(slot) = u.col(k);
        s1 += u.col(slot);
        s2 += u.col(slot).squaredNorm();
      }
      ens.counters.annihilations += 1;
      ens.counters.duplications += 2;
      shift = s1 / static_cast<double>(n);
      const double energy = s2 / n - shift.squaredNorm();
      if (!(energy > 0.0)) throw NumericalError("step: ensemble collapsed to a single velocity");
      scale = std::sqrt(target / energy);
      ens.counters.rescalings += 1;
    } else {
      const VectorXd sigma = random_unit_vector(rng, d);
      auto [vp, vs] = post_collision(u.col(i), u.col(j), sigma);
      u.col(i) = vp;
      u.col(j) = vs;
      ens.counters.collisions += 1;
    }
  }

  u.colwise() -= shift;
  u *= scale;
  renormalize(u);
  ens.counters.rescalings += 1;
  ens.counters.candidates += n_cand;
  ens.counters.majorant_overflows += st.majorant_overflows;
  ens.counters.steps += 1;
  ens.t += cfg.dt;

  st.t = ens.t;
  st.candidates = n_cand;
  st.a = 2.0 * st.accepted / (n * cfg.dt);
  st.b = 2.0 / d * 2.0 * b_sum / (n * cfg.dt);
  return st;
}

std::string time_series_csv(const std::vector<TimeSeriesRow>& rows) {
  std::ostringstream os;
  os << std::setprecision(17) << "t,M_half,M_1,M_3half,M_2,a,b,A,B,annihilations\n";
  for (const auto& r : rows)
    os << r.t << ',' << r.M_half << ',' << r.M_1 << ',' << r.M_3half << ',' << r.M_2 << ',' << r.a << ',' << r.b
       << ',' << r.A << ',' << r.B << ',' << r.annihilations << '\n';
  return os.str();
}

// --------------------------------------------------------- steady runs

namespace {

// Powers |v|^j, j = 0..2 k_max, averaged over the ensemble.
VectorXd radial_power_means(const MatrixXd& v, int max_twice) {
  VectorXd acc = VectorXd::Zero(max_twice + 1);
  for (Index i = 0; i < v.cols(); ++i) {
    const double r = v.col(i).norm();
    double p = 1.0;
    for (int j = 0; j <= max_twice; ++j) {
      acc[j] += p;
      p *= r;
    }
  }
  return acc / static_cast<double>(v.cols());
}

// Column means of per-batch values and their bootstrap standard errors.
std::pair<VectorXd, VectorXd> bootstrap(const MatrixXd& batches, std::uint64_t seed, int resamples = 400) {
  const Index nb = batches.rows();
  const VectorXd mean = batches.colwise().mean().transpose();
  Rng rng(seed);
  VectorXd s = VectorXd::Zero(batches.cols()), s2 = VectorXd::Zero(batches.cols());
  for (int r = 0; r < resamples; ++r) {
    VectorXd m = VectorXd::Zero(batches.cols());
    for (Index q = 0; q < nb; ++q) m += batches.row(static_cast<Index>(rng.index(nb))).transpose();
    m /= static_cast<double>(nb);
    s += m;
    s2 += m.cwiseAbs2();
  }
  const VectorXd mu = s / resamples;
  const VectorXd var = (s2 / resamples - mu.cwiseAbs2()).cwiseMax(0.0) * (resamples / (resamples - 1.0));
  return {mean, var.cwiseSqrt()};
}

constexpr int kProfileMomentTwice = 10;  // moments through M_5
const std::vector<HalfInt> kResidualOrders{HalfInt(1), HalfInt(3), HalfInt(4)};

struct BlockMoments {
  std::vector<double> half, three_half, two;
  void clear() { half.clear(), three_half.clear(), two.clear(); }
};

// Mean and batch-means standard error (8 batches) of a block.
std::pair<double, double> block_stat(const std::vector<double>& xs) {
  constexpr int kBatches = 8;
  const std::size_t per = xs.size() / kBatches;
  std::vector<double> means;
  for (int b = 0; b < kBatches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) s += xs[i];
    means.push_back(s / per);
  }
  double m = 0.0;
  for (double x : means) m += x;
  m /= kBatches;
  double v = 0.0;
  for (double x : means) v += (x - m) * (x - m);
  v /= kBatches - 1;
  return {m, std::sqrt(v / kBatches)};
}

}  // namespace

SteadyProfile run_to_steady(ParticleEnsemble& ens, const SolverConfig& cfg) {
  cfg.validate();
  if (ens.d != cfg.d || ens.size() != cfg.n_particles)
    throw ConfigError("run_to_steady: ensemble does not match the configuration (d or N)");
  const Index n = ens.size();
  const int d = ens.d;

  SteadyProfile prof;
  prof.alpha = cfg.alpha;
  prof.d = d;
  prof.n_particles = n;
  prof.sub_windows = cfg.sub_windows;

  // Time series bookkeeping shared by both phases.
  std::int64_t since_row = 0, acc_row = 0;
  double a_row = 0.0, b_row = 0.0;
  const auto advance = [&](VectorXd& pw) {
    const StepStats st = step(ens, cfg);
    pw = radial_power_means(ens.velocities, kProfileMomentTwice);
    a_row += st.a;
    b_row += st.b;
    ++acc_row;
    if (++since_row == cfg.series_every) {
      TimeSeriesRow row;
      row.t = ens.t;
      row.M_half = pw[1];
      row.M_1 = pw[2];
      row.M_3half = pw[3];
      row.M_2 = pw[4];
      row.a = a_row / acc_row;
      row.b = b_row / acc_row;
      const CoefficientSet cs = CoefficientSet::from_ab(row.a, row.b, cfg.alpha, d);
      row.A = cs.A;
      row.B = cs.B;
      row.annihilations = ens.counters.annihilations;
      prof.series.push_back(row);
      since_row = acc_row = 0;
      a_row = b_row = 0.0;
    }
    return st;
  };

  // Detection.
  const auto block_steps = static_cast<std::int64_t>(std::ceil(cfg.detection_window / cfg.dt / 8.0)) * 8;
  const double t_start = ens.t;
  BlockMoments cur;
  std::vector<std::pair<double, double>> prev;
  int agreements = 0;
  VectorXd pw;
  bool detected = false;
  while (!detected) {
    if (ens.t - t_start >= cfg.t_max) break;
    cur.clear();
    for (std::int64_t s = 0; s < block_steps; ++s) {
      advance(pw);
      cur.half.push_back(pw[1]);
      cur.three_half.push_back(pw[3]);
      cur.two.push_back(pw[4]);
    }
    const std::vector<std::pair<double, double>> stats{block_stat(cur.half), block_stat(cur.three_half),
                                                       block_stat(cur.two)};
    if (!prev.empty()) {
      bool agree = true;
      for (std::size_t q = 0; q < stats.size(); ++q)
        agree = agree && std::abs(stats[q].first - prev[q].first) <=
                             cfg.detection_tolerance * std::hypot(stats[q].second, prev[q].second);
      agreements = agree ? agreements + 1 : 0;
      detected = agreements >= 2;
    }
    prev = stats;
  }
  prof.timed_out = !detected;
  prof.t_detect = ens.t;

  // Averaging.
  const double window = detected ? std::max(ens.t - t_start, cfg.min_average_time) : cfg.detection_window;
  const int nb = cfg.sub_windows;
  const auto per_sub = std::max<std::int64_t>(
      static_cast<std::int64_t>(std::ceil(window / cfg.dt / nb)), cfg.snapshots_per_sub_window);
  const RadialBinning binning = maxwellian_binning(d, cfg.n_bins > 0 ? cfg.n_bins : default_bin_count(n));
  const Index n_hist = binning.size();
  const Index n_mom = kProfileMomentTwice + 1;
  const Index n_res = static_cast<Index>(kResidualOrders.size());
  // Batch layout: histogram | moments | a, b | residuals | collision terms | annihilation rate.
  const Index col_mom = n_hist, col_ab = col_mom + n_mom, col_res = col_ab + 2, col_coll = col_res + n_res,
              col_rate = col_coll + n_res, n_cols = col_rate + 1;
  MatrixXd batches = MatrixXd::Zero(nb, n_cols);
  prof.t_begin = ens.t;
  std::int64_t snapshot_id = 0;
  for (int q = 0; q < nb; ++q) {
    std::int64_t annihilated = 0;
    int snaps = 0;
    for (std::int64_t s = 0; s < per_sub; ++s) {
      annihilated += advance(pw).annihilations;
      batches.block(q, col_mom, 1, n_mom) += pw.transpose();
      for (Index i = 0; i < n; ++i) batches(q, binning.bin_of(ens.velocities.col(i).norm())) += 1.0 / n;
      const bool snap = (s + 1) * cfg.snapshots_per_sub_window / per_sub !=
                        s * cfg.snapshots_per_sub_window / per_sub;
      if (snap) {
        PairSampling ps;
        ps.all_pairs_limit = std::min<Index>(ps.all_pairs_limit, static_cast<Index>(std::sqrt(2.0 * cfg.snapshot_pairs)));
        ps.sampled_pairs = cfg.snapshot_pairs;
        ps.seed = Rng::derive_seed(cfg.seed ^ 0xC0FFEEULL, static_cast<std::uint64_t>(snapshot_id++));
        const CoefficientSet cs = coefficients(ens.velocities, cfg.alpha, ps);
        batches(q, col_ab) += cs.a;
        batches(q, col_ab + 1) += cs.b;
        const auto bal = steady_residuals(ens.velocities, cfg.alpha, kResidualOrders, ps);
        for (Index k = 0; k < n_res; ++k) {
          batches(q, col_res + k) += bal[k].residual;
          batches(q, col_coll + k) += bal[k].collision;
        }
        ++snaps;
      }
    }
    batches.block(q, 0, 1, col_ab) /= static_cast<double>(per_sub);
    batches.block(q, col_ab, 1, 2 + 2 * n_res) /= static_cast<double>(snaps);
    batches(q, col_rate) = 2.0 * annihilated / (static_cast<double>(n) * per_sub * cfg.dt);
  }
  prof.t_end = ens.t;

  const auto [mean, se] = bootstrap(batches, Rng::derive_seed(cfg.seed, 0xB007));
  prof.histogram = Histogram{binning, mean.head(n_hist), se.head(n_hist)};
  for (int j = 0; j < n_mom; ++j) {
    prof.moments.entries[HalfInt(j)] = mean[col_mom + j];
    prof.moments.errors[HalfInt(j)] = se[col_mom + j];
  }
  prof.coefficients =
      CoefficientSet::from_ab(mean[col_ab], mean[col_ab + 1], cfg.alpha, d, se[col_ab], se[col_ab + 1]);
  for (Index k = 0; k < n_res; ++k)
    prof.residuals.push_back({kResidualOrders[k], prof.moments.at(kResidualOrders[k]), mean[col_coll + k],
                              mean[col_res + k], se[col_res + k]});
  prof.annihilation_rate = mean[col_rate];
  prof.annihilation_rate_error = se[col_rate];
  prof.tail = tail_estimate(prof.moments, 2, 6);
  prof.audits = audit_bounds(prof.moments, prof.coefficients, d);
  prof.counters = ens.counters;
  return prof;
}

SteadyProfile run_to_steady(const SolverConfig& cfg, const InitSpec& init) {
  cfg.validate();
  ParticleEnsemble ens = init_ensemble(init, cfg.n_particles, cfg.d, cfg.seed);
  return run_to_steady(ens, cfg);
}

// ---------------------------------------------------------- checkpoints

namespace {

std::string fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

nlohmann::json counters_json(const EnsembleCounters& c) {
  return {{"candidates", c.candidates},       {"collisions", c.collisions},
          {"annihilations", c.annihilations}, {"duplications", c.duplications},
          {"rescalings", c.rescalings},       {"majorant_overflows", c.majorant_overflows},
          {"steps", c.steps}};
}

}  // namespace

std::string save_checkpoint(const ParticleEnsemble& ens, double alpha) {
  nlohmann::json j;
  j["format_version"] = kCheckpointVersion;
  j["d"] = ens.d;
  j["N"] = ens.size();
  j["alpha"] = alpha;
  j["t"] = ens.t;
  j["v_maj"] = ens.v_maj;
  j["candidate_carry"] = ens.candidate_carry;
  j["velocities"] = std::vector<double>(ens.velocities.data(), ens.velocities.data() + ens.velocities.size());
  j["rng_state"] = ens.rng.state();
  j["counters"] = counters_json(ens.counters);
  j["checksum"] = fnv1a(j.dump());
  return j.dump();
}

ParticleEnsemble load_checkpoint(const std::string& text, int expected_d, double* alpha) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: unreadable file (") + e.what() + ")");
  }
  try {
    if (!j.is_object() || !j.contains("checksum")) throw CheckpointError("checkpoint: missing checksum");
    const std::string sum = j.at("checksum").get<std::string>();
    j.erase("checksum");
    if (fnv1a(j.dump()) != sum) throw CheckpointError("checkpoint: checksum mismatch, file is corrupted");
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointVersion)
      throw CheckpointError("checkpoint: format_version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    const int d = j.at("d").get<int>();
    if (expected_d != 0 && d != expected_d)
      throw CheckpointError("checkpoint: dimension " + std::to_string(d) + " does not match the requested d = " +
                            std::to_string(expected_d));
    const auto n = j.at("N").get<Index>();
    const auto v = j.at("velocities").get<std::vector<double>>();
    if (static_cast<Index>(v.size()) != d * n) throw CheckpointError("checkpoint: velocity array has the wrong size");
    ParticleEnsemble e;
    e.d = d;
    e.velocities = Eigen::Map<const MatrixXd>(v.data(), d, n);
    e.t = j.at("t").get<double>();
    e.v_maj = j.at("v_maj").get<double>();
    e.candidate_carry = j.at("candidate_carry").get<double>();
    e.rng.set_state(j.at("rng_state").get<std::string>());
    const auto& c = j.at("counters");
    e.counters.candidates = c.at("candidates").get<std::int64_t>();
    e.counters.collisions = c.at("collisions").get<std::int64_t>();
    e.counters.annihilations = c.at("annihilations").get<std::int64_t>();
    e.counters.duplications = c.at("duplications").get<std::int64_t>();
    e.counters.rescalings = c.at("rescalings").get<std::int64_t>();
    e.counters.majorant_overflows = c.at("majorant_overflows").get<std::int64_t>();
    e.counters.steps = c.at("steps").get<std::int64_t>();
    if (alpha) *alpha = j.at("alpha").get<double>();
    return e;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: malformed content (") + e.what() + ")");
  }
}

void write_checkpoint(const std::string& path, const ParticleEnsemble& ens, double alpha) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("checkpoint: cannot write " + path);
  out << save_checkpoint(ens, alpha);
  if (!out) throw CheckpointError("checkpoint: write to " + path + " failed");
}

ParticleEnsemble read_checkpoint(const std::string& path, int expected_d, double* alpha) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_checkpoint(ss.str(), expected_d, alpha);
}

}  // namespace annihilation
