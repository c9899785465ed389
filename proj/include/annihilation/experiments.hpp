#pragma once

#include "annihilation/dsmc.hpp"
#include "annihilation/linearized.hpp"
#include "annihilation/moments.hpp"

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace annihilation {

/// (a, k) of the weight <r>^k e^{a r}.
struct WeightPair {
  double a = 0.0;
  double k = 0.0;
  std::string label() const;
};

struct StudyConfig {
  SolverConfig solver;
  InitSpec init{InitKind::uniform_ball};
  std::vector<double> alphas{0.0, 0.02, 0.05, 0.08, 0.12};
  std::vector<WeightPair> weights{{0.0, 0.0}, {0.0, 1.0}, {0.2, 0.0}};
  Eigen::Index floor_particles = 100'000;
  int floor_replicas = 4;
  double uniqueness_alpha = 0.05;
  std::vector<InitSpec> uniqueness_inits{InitSpec{InitKind::uniform_ball}, InitSpec{InitKind::two_shells, 1.0, 2.0, 0.5}};
  std::vector<Eigen::Index> spectral_sizes{48, 96};
  GainOrders orders;
  double tail_ratio_max = 2.0;
  double tail_stability = 0.2;
  WeightPair nonlinear_weight{0.2, 1.0};
  int workers = 1;

  void validate() const;
};

/// Distance between a renormalized Maxwellian sample and the exact shell
/// masses, averaged over replicas; one value per weight.
struct NoiseFloor {
  Eigen::Index n_particles = 0;
  Eigen::Index n_bins = 0;
  int replicas = 0;
  std::vector<WeightPair> weights;
  std::vector<double> values;
  std::vector<double> spreads;  ///< replica standard deviation
};

NoiseFloor noise_floor(int d, Eigen::Index n_particles, Eigen::Index n_bins, const std::vector<WeightPair>& weights,
                       int replicas, std::uint64_t seed);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double correlation = 0.0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct SweepRow {
  double alpha = 0.0;
  std::uint64_t seed = 0;
  SteadyProfile profile;
  std::vector<WeightedDistance> distances;  ///< per weight, to the Maxwellian
  std::vector<double> floor_subtracted;     ///< distance minus noise floor (signed)
  bool audits_pass = false;
  bool residuals_pass = false;  ///< k = 1/2, 3/2, 2 within 3 bootstrap errors
};

struct SweepResult {
  int d = 3;
  std::vector<double> alphas;
  std::vector<WeightPair> weights;
  NoiseFloor floor;
  std::vector<SweepRow> rows;
  LinearFit fit;          ///< floor-subtracted (0,0)-distance against alpha over alpha > 0
  double spearman = 0.0;  ///< rank correlation over alpha > 0
  bool control_at_floor = false;  ///< alpha = 0 distance <= 2 x floor
  bool partial = false;           ///< some run timed out
};

/// Runs for each alpha (including the alpha = 0 control) on independent
/// derived seeds, so the result does not depend on the worker count.
SweepResult boltzmann_limit_study(const StudyConfig& cfg);

struct UniquenessVerdict {
  double alpha = 0.0;
  std::vector<std::string> inits;
  std::vector<std::uint64_t> seeds;
  std::vector<WeightPair> weights;
  std::vector<double> distances;  ///< per weight, max over pairs of runs
  std::vector<double> errors;     ///< combined bootstrap error of that pair
  bool pass = false;              ///< every distance <= 3 x its error
  bool partial = false;
  std::vector<SteadyProfile> profiles;
};

UniquenessVerdict uniqueness_study(double alpha, const std::vector<InitSpec>& inits, const StudyConfig& cfg);
/// Same init on two seeds; a statistical-reproducibility control.
UniquenessVerdict reproducibility_control(double alpha, const InitSpec& init, const StudyConfig& cfg);

struct TailRow {
  std::string label;  ///< "maxwellian" for the closed-form control
  double alpha = 0.0;
  TailEstimate primary;    ///< k in [2, 6]
  TailEstimate secondary;  ///< k in [3, 8]
  bool stable = false;     ///< |A1 - A2| <= tail_stability * max(A1, A2)
};

struct TailStudy {
  std::vector<TailRow> rows;  ///< control first, then the sweep
  double ratio = 0.0;         ///< max/min primary A_est over the sweep rows
  double ratio_secondary = 0.0;
  double ratio_max = 2.0;
  bool all_positive = false;
  bool pass = false;  ///< all_positive and ratio <= ratio_max
  bool noisy = false;
};

TailStudy tail_uniformity_study(const SweepResult& sweep, const StudyConfig& cfg);
TailStudy tail_uniformity_study(const StudyConfig& cfg);

/// Gaussian moments Gamma(k + d/2)/Gamma(d/2) with M_1 = d/2 scaling.
MomentVector maxwellian_moments(int d, HalfInt k_max);

struct SpectrumRow {
  Eigen::Index n = 0;
  bool ok = false;
  std::string error;
  std::vector<std::complex<double>> eigenvalues;
  int kernel_dimension = 0;
  double kernel_tolerance = 0.0;
  double nu = 0.0;             ///< minus the largest real part outside the two smallest |lambda|
  double null_max = 0.0;       ///< largest |lambda| among the two smallest
  double asymmetry = 0.0;
  double seconds = 0.0;
};

struct SpectrumStudy {
  std::vector<SpectrumRow> rows;
  double drift = 0.0;  ///< |nu(last) - nu(previous)| / nu(last)
  bool pass = false;   ///< kernel dimension 2, nu > 0 everywhere, drift <= 0.1
};

SpectrumStudy spectral_gap_study(const std::vector<Eigen::Index>& sizes, int d = 3, const GainOrders& orders = {});

struct NonlinearRow {
  double alpha = 0.0;
  double D = 0.0;
  double D_error = 0.0;
  double fitted = 0.0;
  double residual = 0.0;
  bool within = false;  ///< |residual| <= 3 D_error
};

/// D = distance in L^1_k(e^{a r}) to the Maxwellian, fitted as
/// D ~ c1 D^2 + c2 alpha; also reports a plain linear fit in alpha.
struct NonlinearProbe {
  WeightPair weight;
  std::vector<NonlinearRow> rows;
  double c1 = 0.0;
  double c2 = 0.0;
  LinearFit linear;
  bool residuals_within = false;
};

NonlinearProbe nonlinear_estimate_probe(const SweepResult& sweep, const StudyConfig& cfg);
NonlinearProbe nonlinear_estimate_probe(const StudyConfig& cfg);

}  // namespace annihilation
