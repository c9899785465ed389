#pragma once

#include "annihilation/error.hpp"
#include "annihilation/moments.hpp"
#include "annihilation/particles.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace annihilation {

enum class InitKind { maxwellian, uniform_ball, two_shells };

/// Isotropic initial law. two_shells puts a fraction p of the particles at
/// speed r1 and the rest at speed r2.
struct InitSpec {
  InitKind kind = InitKind::maxwellian;
  double r1 = 1.0;
  double r2 = 2.0;
  double p = 0.5;

  /// "maxwellian", "uniform_ball", "two_shells" or "two_shells(r1,r2,p)".
  static InitSpec parse(const std::string& text);
  std::string str() const;
  void validate() const;
};

inline constexpr Eigen::Index kMinParticles = 1000;

/// Sample N isotropic velocities and renormalize them exactly.
ParticleEnsemble init_ensemble(const InitSpec& init, Eigen::Index n_particles, int d, std::uint64_t seed);

struct SolverConfig {
  int d = 3;
  Eigen::Index n_particles = 100'000;
  double alpha = 0.0;
  double dt = 0.125;
  double oversampling = 1.0;        ///< multiplies the candidate rate and the majorant
  double v_maj = 0.0;               ///< 0: 2 max|v| of the initial ensemble
  double detection_window = 20.0;   ///< block length for steady detection
  double detection_tolerance = 3.0; ///< allowed block-to-block change in standard errors
  double min_average_time = 160.0;
  double t_max = 2000.0;
  int sub_windows = 16;             ///< batches for the bootstrap errors, at least 8
  int snapshots_per_sub_window = 2; ///< pair-statistic evaluations per batch
  std::int64_t snapshot_pairs = 200'000;
  Eigen::Index n_bins = 0;          ///< 0: ceil(N^{1/3})
  int series_every = 8;             ///< steps between time-series rows
  std::uint64_t seed = 1;

  void validate() const;
  /// Advisory messages, e.g. alpha at or above the moment threshold alpha0(d).
  std::vector<std::string> warnings() const;
};

struct StepStats {
  double t = 0.0;
  std::int64_t candidates = 0;
  std::int64_t accepted = 0;
  std::int64_t annihilations = 0;
  std::int64_t majorant_overflows = 0;
  double a = 0.0;  ///< 2 accepted / (N dt)
  double b = 0.0;  ///< collision-weighted (2/d) <(|v|^2 + |v*|^2)/2>
  CoefficientSet coefficients(double alpha, int d) const { return CoefficientSet::from_ab(a, b, alpha, d); }
};

/// One dt of majorant-rate pair sampling. Annihilated pairs are refilled
/// immediately by copies of uniformly chosen survivors and the affine
/// normalization is tracked continuously; the velocities are renormalized
/// exactly at the end.
StepStats step(ParticleEnsemble& ens, const SolverConfig& cfg);

struct TimeSeriesRow {
  double t = 0.0;
  double M_half = 0.0;
  double M_1 = 0.0;
  double M_3half = 0.0;
  double M_2 = 0.0;
  double a = 0.0;
  double b = 0.0;
  double A = 0.0;
  double B = 0.0;
  std::int64_t annihilations = 0;  ///< cumulative
};

std::string time_series_csv(const std::vector<TimeSeriesRow>& rows);

struct SteadyProfile {
  double alpha = 0.0;
  int d = 3;
  Eigen::Index n_particles = 0;
  bool timed_out = false;
  double t_detect = 0.0;  ///< time at which the detection criterion fired
  double t_begin = 0.0;   ///< averaging window
  double t_end = 0.0;
  int sub_windows = 0;
  Histogram histogram;    ///< time-averaged shell masses, bootstrap errors
  MomentVector moments;   ///< time-averaged, bootstrap errors
  CoefficientSet coefficients;
  std::vector<ParticleBalance> residuals;  ///< k = 1/2, 3/2, 2
  TailEstimate tail;
  std::vector<AuditCheck> audits;
  double annihilation_rate = 0.0;  ///< annihilated mass per unit time
  double annihilation_rate_error = 0.0;
  std::vector<TimeSeriesRow> series;
  EnsembleCounters counters;
};

/// Advance until the block averages of M_{1/2}, M_{3/2}, M_2 agree for two
/// consecutive blocks, then average over max(t_detect, min_average_time).
/// Without detection by t_max the result is flagged and averaged over one
/// detection window.
SteadyProfile run_to_steady(ParticleEnsemble& ens, const SolverConfig& cfg);
SteadyProfile run_to_steady(const SolverConfig& cfg, const InitSpec& init);

// ---------------------------------------------------------- checkpoints

inline constexpr int kCheckpointVersion = 1;

/// JSON container {format_version, d, N, alpha, t, v_maj, candidate_carry,
/// velocities, rng_state, counters, checksum}.
std::string save_checkpoint(const ParticleEnsemble& ens, double alpha);

/// Throws CheckpointError on checksum, version or dimension mismatch
/// (expected_d = 0 accepts any dimension).
ParticleEnsemble load_checkpoint(const std::string& text, int expected_d = 0, double* alpha = nullptr);

void write_checkpoint(const std::string& path, const ParticleEnsemble& ens, double alpha);
ParticleEnsemble read_checkpoint(const std::string& path, int expected_d = 0, double* alpha = nullptr);

}  // namespace annihilation
