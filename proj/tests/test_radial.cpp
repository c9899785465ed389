#include "annihilation/linearized.hpp"
#include "annihilation/quadrature.hpp"
#include "annihilation/radial.hpp"
#include "annihilation/random.hpp"
#include "annihilation/validation.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace annihilation;
using Eigen::VectorXd;

namespace {

double gaussian_moment(int d, double k) { return std::tgamma(k + 0.5 * d) / std::tgamma(0.5 * d); }

double moment(const RadialDistribution& f, double k) {
  return f.grid.weights.dot(f.values.cwiseProduct(f.grid.nodes.array().pow(2 * k).matrix()));
}

}  // namespace

TEST_CASE("grid integrates Maxwellian moments") {
  for (int d : {2, 3, 4}) {
    const RadialDistribution m = maxwellian(RadialGrid::make(d, 48));
    for (double k : {0.0, 0.5, 1.0, 2.0}) CHECK(moment(m, k) == doctest::Approx(gaussian_moment(d, k)).epsilon(1e-6));
  }
  const RadialDistribution m = maxwellian(RadialGrid::make(3, 48));
  CHECK(moment(m, 1.0) == doctest::Approx(1.5).epsilon(1e-7));
  CHECK(moment(m, 2.0) == doctest::Approx(3.75).epsilon(1e-6));
  CHECK(moment(m, 0.5) == doctest::Approx(2.0 / std::sqrt(std::numbers::pi)).epsilon(1e-6));
}

TEST_CASE("grid construction errors") {
  CHECK_THROWS_AS(RadialGrid::make(3, 4), ConfigError);
  CHECK_THROWS_AS(RadialGrid::make(1, 48), ConfigError);
  CHECK_THROWS_AS(maxwellian(RadialGrid::make(3, 48, 2.0)), ConfigError);
}

TEST_CASE("locate_sq brackets every node interval") {
  const RadialGrid g = RadialGrid::make(3, 37);
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform() * 36.0;
    const auto j = g.locate_sq(u);
    CHECK(g.nodes[j] * g.nodes[j] <= u);
    CHECK(u < g.nodes[j + 1] * g.nodes[j + 1] + 1e-12);
  }
}

TEST_CASE("interpolation is exact for Gaussians and positive") {
  const RadialDistribution m = maxwellian(RadialGrid::make(3, 48));
  const RadialInterpolant mi(m);
  CHECK(mi.log_space());
  for (double r : {0.01, 0.3, 1.7, 3.3, 5.9})
    CHECK(mi(r) == doctest::Approx(std::pow(std::numbers::pi, -1.5) * std::exp(-r * r)).epsilon(1e-10));
  CHECK(mi(6.5) == 0.0);
  const RadialDistribution s = test_density(RadialGrid::make(3, 48), "shell");
  const RadialInterpolant si(s);
  CHECK_FALSE(si.log_space());
  for (int i = 0; i < 600; ++i) CHECK(si(0.01 * i) >= 0.0);
}

TEST_CASE("distribution validation") {
  RadialDistribution m = maxwellian(RadialGrid::make(3, 24));
  CHECK_NOTHROW(m.validate());
  m.values[3] = -1e-3;
  CHECK_THROWS_AS(m.validate(), ValidationError);
  m.values[3] = std::nan("");
  CHECK_THROWS_AS(m.validate(), ValidationError);
}

TEST_CASE("loss kernel against a Monte Carlo sphere average") {
  // K_3(1,1) from 10^7 directions.
  Rng rng(17);
  const int n = 10'000'000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d g(rng.normal(), rng.normal(), rng.normal());
    const double x = std::sqrt(2.0 - 2.0 * g[0] / g.norm());
    s += x;
    s2 += x * x;
  }
  const double m = s / n, se = std::sqrt((s2 / n - m * m) / n);
  CHECK(std::abs(loss_kernel(3, 1.0, 1.0) - m) < 3 * se);
  CHECK(loss_kernel(3, 1.0, 1.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));

  for (int d : {2, 4}) {
    for (double r : {0.3, 1.0, 2.2})
      for (double rp : {0.1, 1.0, 3.0}) {
        const int k = 200'000;
        double a = 0.0, a2 = 0.0;
        for (int i = 0; i < k; ++i) {
          const VectorXd w = random_unit_vector(rng, d);
          const double x = std::sqrt(std::max(r * r + rp * rp - 2 * r * rp * w[0], 0.0));
          a += x;
          a2 += x * x;
        }
        const double mm = a / k, sse = std::sqrt((a2 / k - mm * mm) / k);
        CHECK(std::abs(loss_kernel(d, r, rp) - mm) < 4 * sse);
      }
  }
}

TEST_CASE("loss intensity") {
  const RadialGrid g = RadialGrid::make(3, 64);
  // A narrow spike at the origin sees |xi - 0| = |xi|.
  RadialDistribution spike = RadialDistribution::from_function(g, [](double r) { return std::exp(-r * r / 1e-3); });
  spike.values /= spike.mass();
  CHECK(loss_intensity(spike, 1.0) == doctest::Approx(1.0).epsilon(2e-3));

  // a_M from a Monte Carlo chi(3) oracle: |X - Y| with X, Y ~ M has unit-variance coordinates.
  const RadialDistribution m = maxwellian(RadialGrid::make(3, 48));
  const double a = m.grid.weights.dot(m.values.cwiseProduct(loss_intensity_nodes(m)));
  Rng rng(8);
  const int n = 2'000'000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d z(rng.normal(), rng.normal(), rng.normal());
    s += z.norm();
    s2 += z.squaredNorm();
  }
  const double mc = s / n, se = std::sqrt((s2 / n - mc * mc) / n);
  CHECK(std::abs(a - mc) < 3 * se);
  CHECK(a == doctest::Approx(1.59577).epsilon(1e-5));
}

TEST_CASE("equilibrium identity Q+(M,M) = M L(M)") {
  const RadialDistribution m = maxwellian(RadialGrid::make(3, 48));
  const VectorXd gain = gain_nodes(m, m);
  const VectorXd loss = m.values.cwiseProduct(loss_intensity_nodes(m));
  CHECK((gain - loss).cwiseAbs().maxCoeff() <= 5e-3 * loss.maxCoeff());
  CHECK(annihilation_apply(m, 0.0).values.cwiseAbs().maxCoeff() <= 5e-3 * loss.maxCoeff());
}

TEST_CASE("collisional mass and energy identities") {
  const RadialGrid g = RadialGrid::make(3, 48);
  for (const auto& name : test_density_names()) {
    CAPTURE(name);
    const RadialDistribution f = test_density(g, name);
    const VectorXd gain = gain_nodes(f, f);
    const VectorXd loss = f.values.cwiseProduct(loss_intensity_nodes(f));
    const VectorXd r2 = g.nodes.cwiseAbs2();
    CHECK(g.weights.dot(gain) == doctest::Approx(g.weights.dot(loss)).epsilon(5e-3));
    CHECK(g.weights.dot(gain.cwiseProduct(r2)) == doctest::Approx(g.weights.dot(loss.cwiseProduct(r2))).epsilon(1e-2));
  }
}

TEST_CASE("annihilation operator") {
  const RadialGrid g = RadialGrid::make(3, 48);
  const RadialDistribution f = test_density(g, "exponential");
  const VectorXd loss = f.values.cwiseProduct(loss_intensity_nodes(f));
  CHECK((annihilation_apply(f, 1.0).values + loss).cwiseAbs().maxCoeff() <= 1e-10);
  const double a = g.weights.dot(loss);
  for (double alpha : {0.1, 0.5})
    CHECK(g.weights.dot(annihilation_apply(f, alpha).values) == doctest::Approx(-alpha * a).epsilon(1e-2));
}

TEST_CASE("gain orders") {
  GainOrders o;
  CHECK_NOTHROW(o.validate());
  o.polar = 4;
  CHECK_THROWS_AS(o.validate(), ConfigError);
  const RadialDistribution m = maxwellian(RadialGrid::make(3, 24));
  CHECK_THROWS_AS(gain(m, m, 1.0, o), ConfigError);
}

TEST_CASE("Carleman sampler agrees with direct quadrature") {
  const RadialGrid g = RadialGrid::make(3, 48);
  std::uint64_t seed = 100;
  for (const auto& f : {maxwellian(g), test_density(g, "bimodal")})
    for (double r : {0.5, 1.0, 2.0}) {
      const MonteCarloEstimate mc = gain_carleman_mc(f, f, r, 200'000, seed++);
      CHECK(mc.samples == 200'000);
      CHECK(std::abs(mc.value - gain(f, f, r)) < 3.5 * mc.std_error);
    }
  RadialDistribution zero = maxwellian(g);
  zero.values.setZero();
  const MonteCarloEstimate z = gain_carleman_mc(zero, zero, 1.0, 10'000, 1);
  CHECK(z.value == 0.0);
  CHECK(z.std_error == 0.0);
  CHECK_THROWS_AS(gain_carleman_mc(zero, zero, 1.0, 100, 1), ConfigError);
}

TEST_CASE("Gamma_B against the closed form and the sampler") {
  const RadialDistribution m = maxwellian(RadialGrid::make(3, 64));
  for (double r : {0.4, 1.0, 2.5}) {
    const double exact = std::pow(std::numbers::pi, -1.5) * std::exp(-r * r) / r;
    CHECK(gamma_b_direct(m, r) == doctest::Approx(exact).epsilon(1e-4));
    const MonteCarloEstimate mc = gamma_b_carleman_mc(m, r, 200'000, 7);
    CHECK(std::abs(mc.value - exact) < 3.5 * mc.std_error);
  }
  // A narrow spike in place of delta_0 reproduces Gamma_B through the general gain.
  const RadialGrid g = RadialGrid::make(3, 96);
  RadialDistribution spike = RadialDistribution::from_function(g, [](double r) { return std::exp(-r * r / 2e-3); });
  spike.values /= spike.mass();
  const RadialDistribution mg = maxwellian(g);
  CHECK(gain(spike, mg, 1.0, {64, 32, 32}) == doctest::Approx(gamma_b_direct(mg, 1.0)).epsilon(2e-2));
}

TEST_CASE("CSV and JSON round trips") {
  const RadialDistribution m = maxwellian(RadialGrid::make(3, 30));
  const RadialDistribution c = radial_from_csv(to_csv(m), 3);
  CHECK((c.values - m.values).norm() == 0.0);
  CHECK((c.grid.weights - m.grid.weights).norm() <= 1e-12 * m.grid.weights.norm());
  const RadialDistribution j = radial_from_json(to_json(m));
  CHECK((j.values - m.values).norm() == 0.0);
  CHECK(j.grid.d == 3);
  CHECK_THROWS(radial_from_csv("x,y\n1,2\n", 3));
}

TEST_CASE("linearized operator") {
  const RadialGrid g = RadialGrid::make(3, 48);
  const LinearizedMatrix lin = assemble_linearized(g);
  const RadialDistribution m = maxwellian(g);
  const VectorXd mv = m.values;
  const VectorXd ev = m.values.cwiseProduct(g.nodes.cwiseAbs2());
  const double scale = lin.matrix.norm() * mv.norm();
  CHECK((lin.matrix * mv).norm() <= 1e-4 * scale);
  CHECK((lin.matrix * ev).norm() <= 1e-4 * lin.matrix.norm() * ev.norm());
  CHECK(relative_asymmetry(lin) <= 0.05);
  const auto ev_sorted = spectrum(lin);
  CHECK(std::abs(ev_sorted[0]) < 1e-4);
  CHECK(std::abs(ev_sorted[1]) < 1e-4);
  CHECK(ev_sorted[2].real() < -0.5);
  CHECK_THROWS_AS(assemble_linearized(RadialGrid::make(3, 130)), ConfigError);
}
