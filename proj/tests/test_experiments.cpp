#include "annihilation/experiments.hpp"

#include <doctest.h>

#include <cmath>

using namespace annihilation;

namespace {

StudyConfig small_study() {
  StudyConfig c;
  c.solver.n_particles = 2000;
  c.solver.detection_window = 5.0;
  c.solver.min_average_time = 10.0;
  c.solver.t_max = 300.0;
  c.solver.sub_windows = 8;
  c.solver.snapshot_pairs = 20000;
  c.alphas = {0.0, 0.05, 0.1, 0.2};
  c.floor_particles = 2000;
  c.floor_replicas = 2;
  c.spectral_sizes = {24, 32};
  return c;
}

}  // namespace

TEST_CASE("linear fit and rank correlation") {
  const LinearFit f = linear_fit({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.correlation == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {1, 8, 27, 64}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8));
  CHECK_THROWS_AS(linear_fit({1}, {1}), ValidationError);
}

TEST_CASE("noise floor scales like the multinomial L1 deviation") {
  const std::vector<WeightPair> w{{0.0, 0.0}, {0.2, 0.0}};
  const NoiseFloor nf = noise_floor(3, 20000, 0, w, 16, 3);
  CHECK(nf.n_bins == 28);
  REQUIRE(nf.values.size() == 2);
  const double expected = std::sqrt(2.0 / M_PI) * std::sqrt(27.0 / 20000.0);
  CHECK(nf.values[0] == doctest::Approx(expected).epsilon(0.15));
  CHECK(nf.values[1] > nf.values[0]);
  CHECK(nf.spreads[0] > 0.0);
  CHECK_THROWS_AS(noise_floor(3, 20000, 0, w, 0, 3), ConfigError);
}

TEST_CASE("study configuration") {
  StudyConfig c;
  CHECK_NOTHROW(c.validate());
  c.alphas = {0.05, 0.02};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.alphas = {0.0, 0.3};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = StudyConfig{};
  c.spectral_sizes = {200};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = StudyConfig{};
  c.uniqueness_inits.resize(1);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = StudyConfig{};
  c.weights = {{2.0, 0.0}};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(WeightPair{0.2, 0.0}.label() == "a0.2_k0");
}

TEST_CASE("small sweep, tails and nonlinear probe") {
  StudyConfig c = small_study();
  c.workers = 2;
  const SweepResult s = boltzmann_limit_study(c);
  CHECK_FALSE(s.partial);
  REQUIRE(s.rows.size() == 4);
  CHECK(s.floor.values.size() == 3);
  for (const auto& r : s.rows) {
    CHECK(r.distances.size() == 3);
    CHECK(r.floor_subtracted.size() == 3);
    for (std::size_t w = 0; w < 3; ++w) {
      CHECK(r.distances[w].value >= 0.0);
      CHECK(r.floor_subtracted[w] == doctest::Approx(r.distances[w].value - s.floor.values[w]));
    }
    CHECK(r.audits_pass);
  }
  CHECK(s.rows.back().distances[0].value > s.rows.front().distances[0].value);

  c.workers = 1;
  const SweepResult serial = boltzmann_limit_study(c);
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    CHECK(serial.rows[i].seed == s.rows[i].seed);
    CHECK(serial.rows[i].distances[0].value == s.rows[i].distances[0].value);
  }

  const TailStudy t = tail_uniformity_study(s, c);
  REQUIRE(t.rows.size() == 5);
  CHECK(t.rows.front().label == "maxwellian");
  CHECK(t.all_positive);
  CHECK(t.ratio >= 1.0);

  const NonlinearProbe p = nonlinear_estimate_probe(s, c);
  CHECK(p.weight.a == 0.2);
  CHECK(p.rows.size() == 4);
  CHECK(std::isfinite(p.c1));
  CHECK(std::isfinite(p.c2));
  for (const auto& r : p.rows) CHECK(r.residual == doctest::Approx(r.D - r.fitted));
}

TEST_CASE("Maxwellian control moments") {
  const MomentVector m = maxwellian_moments(3, HalfInt::whole(4));
  CHECK(m.at(HalfInt::whole(1)) == doctest::Approx(1.5));
  CHECK(m.at(HalfInt::whole(2)) == doctest::Approx(3.75));
  CHECK(m.at(HalfInt(3)) == doctest::Approx(4.0 / std::sqrt(M_PI)));
}

TEST_CASE("small uniqueness studies") {
  StudyConfig c = small_study();
  c.workers = 2;
  const UniquenessVerdict u = uniqueness_study(0.0, c.uniqueness_inits, c);
  CHECK(u.inits.size() == 2);
  CHECK(u.profiles.size() == 2);
  CHECK(u.distances.size() == c.weights.size());
  CHECK(u.seeds[0] != u.seeds[1]);
  CHECK(u.pass);
  const UniquenessVerdict r = reproducibility_control(0.05, c.init, c);
  CHECK(r.inits[0] == r.inits[1]);
  CHECK(r.seeds[0] != r.seeds[1]);
  for (std::size_t w = 0; w < r.distances.size(); ++w) CHECK(r.errors[w] > 0.0);
}

TEST_CASE("coarse spectral gap study") {
  const SpectrumStudy s = spectral_gap_study({24, 32});
  REQUIRE(s.rows.size() == 2);
  for (const auto& r : s.rows) {
    CHECK(r.ok);
    CHECK(r.kernel_dimension == 2);
    CHECK(r.nu > 0.0);
    CHECK(r.eigenvalues.size() == static_cast<std::size_t>(r.n));
  }
  CHECK(s.drift >= 0.0);
}
