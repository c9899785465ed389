#include "annihilation/kinematics.hpp"
#include "annihilation/moments.hpp"
#include "annihilation/quadrature.hpp"
#include "annihilation/random.hpp"
#include "annihilation/validation.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace annihilation;
using namespace annihilation::literals;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd sphere_cloud(int d, Eigen::Index n, double radius, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd v(d, n);
  for (Eigen::Index i = 0; i < n; ++i) v.col(i) = radius * random_unit_vector(rng, d);
  return v;
}

MatrixXd gaussian_cloud(int d, Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd v(d, n);
  rng.fill_normal(v);
  return v * std::sqrt(0.5);
}

MomentVector maxwellian_vector(int d, int twice_max) {
  MomentVector ms;
  for (int t = 0; t <= twice_max; ++t)
    ms.entries[HalfInt(t)] = std::tgamma(0.5 * t + 0.5 * d) / std::tgamma(0.5 * d);
  return ms;
}

}  // namespace

TEST_CASE("particle moments of a sphere cloud") {
  const MatrixXd v = sphere_cloud(3, 500, std::sqrt(1.5), 1);
  const MomentVector ms = moments_of(v, HalfInt::whole(2));
  CHECK(ms.at(HalfInt(0)) == doctest::Approx(1.0));
  CHECK(ms.at(HalfInt::whole(1)) == doctest::Approx(1.5).epsilon(1e-13));
  CHECK(ms.at(HalfInt::whole(2)) == doctest::Approx(2.25).epsilon(1e-13));
  CHECK(ms.at(HalfInt(1)) == doctest::Approx(std::sqrt(1.5)).epsilon(1e-13));
  CHECK(ms.error(HalfInt::whole(2)) < 1e-6);
  CHECK_THROWS_AS(ms.at(HalfInt::whole(5)), ValidationError);
}

TEST_CASE("quadrature moments of the Maxwellian") {
  const RadialDistribution m = maxwellian(RadialGrid::make(3, 48));
  const MomentVector ms = moments_of(m, HalfInt::whole(5));
  const MomentVector ref = maxwellian_vector(3, 10);
  for (const auto& [k, val] : ref.entries) {
    CAPTURE(k.str());
    CHECK(ms.at(k) == doctest::Approx(val).epsilon(1e-6));
    CHECK(ms.error(k) == 0.0);
  }
}

TEST_CASE("coefficients of the Maxwellian") {
  const RadialDistribution m = maxwellian(RadialGrid::make(3, 48));
  const CoefficientSet cs = coefficients(m, 0.0);
  CHECK(cs.a == doctest::Approx(4.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-6));
  CHECK(cs.A == 0.0);
  CHECK(cs.B == 0.0);
  const CoefficientSet c2 = CoefficientSet::from_ab(cs.a, cs.b, 0.2, 3);
  CHECK(c2.A == doctest::Approx(-0.1 * 5 * cs.a + 0.1 * 3 * cs.b));
  CHECK(c2.B == doctest::Approx(0.1 * (cs.b - cs.a)));
  CHECK(std::abs(3 * c2.B - c2.A - 0.2 * cs.a) <= 1e-14);
  CHECK(std::abs(5 * c2.B - c2.A - 0.2 * cs.b) <= 1e-14);
}

TEST_CASE("pair U-statistics against a brute-force oracle") {
  const MatrixXd v = gaussian_cloud(3, 300, 5);
  double sa = 0.0, sb = 0.0;
  int pairs = 0;
  VectorXd h1 = VectorXd::Zero(v.cols());
  for (Eigen::Index i = 0; i < v.cols(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      if (i == j) continue;
      const double u = (v.col(i) - v.col(j)).norm();
      if (j > i) {
        sa += u;
        sb += u * v.col(i).squaredNorm();
        sb += u * v.col(j).squaredNorm();
        ++pairs;
      }
      h1[i] += u / (v.cols() - 1.0);
    }
  const double a = sa / pairs, b = (2.0 / 3.0) * sb / (2.0 * pairs);
  const double sd = std::sqrt((h1.array() - h1.mean()).square().sum() / (h1.size() - 1.0));
  const CoefficientSet cs = coefficients(v, 0.1);
  CHECK(cs.a == doctest::Approx(a).epsilon(1e-12));
  CHECK(cs.b == doctest::Approx(b).epsilon(1e-12));
  CHECK(cs.a_error == doctest::Approx(2.0 * sd / std::sqrt(double(v.cols()))).epsilon(1e-9));

  // The sampled estimator scatters around the exact U-statistic at its own standard error.
  const MatrixXd w = gaussian_cloud(3, 6000, 6);
  PairSampling all;
  all.all_pairs_limit = 10000;
  const CoefficientSet exact = coefficients(w, 0.0, all);
  int inside = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    PairSampling ps;
    ps.sampled_pairs = 200'000;
    ps.seed = s + 1;
    const CoefficientSet est = coefficients(w, 0.0, ps);
    if (std::abs(est.a - exact.a) < 2.0 * est.a_error) ++inside;
  }
  CHECK(inside >= 18);
}

TEST_CASE("audit bounds") {
  const RadialDistribution m = maxwellian(RadialGrid::make(3, 48));
  const auto checks = audit_bounds(moments_of(m, HalfInt(3)), coefficients(m, 0.0), 3);
  CHECK(checks.size() == 12);
  CHECK(all_pass(checks));

  // On a sphere the Jensen bound on M_3/2 is attained: slack zero, still a pass.
  const MatrixXd v = sphere_cloud(3, 2000, std::sqrt(1.5), 2);
  const auto sc = audit_bounds(moments_of(v, HalfInt(3)), coefficients(v, 0.0), 3);
  for (const auto& c : sc)
    if (c.name == "(d/2)^{3/2} <= M_3/2") {
      CHECK(std::abs(c.slack) < 1e-10);
      CHECK(c.pass);
    }

  MomentVector bad = moments_of(m, HalfInt(3));
  bad.entries[HalfInt(3)] = 1.0;
  CHECK_FALSE(all_pass(audit_bounds(bad, coefficients(m, 0.0), 3)));
  CHECK_THROWS_AS(audit_bounds(moments_of(m, HalfInt(1)), coefficients(m, 0.0), 3), ValidationError);
}

TEST_CASE("steady residual") {
  const RadialGrid g = RadialGrid::make(3, 48);
  const RadialDistribution m = maxwellian(g);
  for (HalfInt k : {HalfInt(1), HalfInt(3), HalfInt::whole(2)})
    CHECK(std::abs(steady_residual(m, 0.0, k)) < 1e-3);
  const RadialDistribution f = test_density(g, "bimodal");
  for (double alpha : {0.1, 0.3}) {
    CHECK(std::abs(steady_residual(f, alpha, HalfInt(0))) < 5e-3 * alpha);
    CHECK(std::abs(steady_residual(f, alpha, HalfInt::whole(1))) < 2e-2 * alpha);
  }
  CHECK(balance_residual(0.5, HalfInt::whole(2), 1.0, 2.0, 3.0, 4.0) == doctest::Approx(0.5 * 3 - 0.5 * 2 * 2 * 3 - 4));
}

TEST_CASE("post-collision power average against a Monte Carlo over sigma") {
  Rng rng(12);
  for (int d : {2, 3, 4}) {
    const VectorXd v = VectorXd::Random(d) * 1.5, w = VectorXd::Random(d);
    for (HalfInt k : {HalfInt(1), HalfInt::whole(1), HalfInt(3), HalfInt::whole(3)}) {
      const int n = 200'000;
      double s = 0.0, s2 = 0.0;
      for (int i = 0; i < n; ++i) {
        const VectorXd sigma = random_unit_vector(rng, d);
        const double x = std::pow(post_collision(v, w, sigma).first.squaredNorm(), k.value());
        s += x;
        s2 += x * x;
      }
      const double mc = s / n, se = std::sqrt((s2 / n - mc * mc) / n);
      CAPTURE(d);
      CAPTURE(k.str());
      CHECK(std::abs(mean_post_collision_power(d, v.squaredNorm(), w.squaredNorm(), v.dot(w), k) - mc) < 4 * se);
    }
  }
  // Equal velocities: no spread.
  CHECK(mean_post_collision_power(3, 2.0, 2.0, 2.0, HalfInt::whole(2)) == doctest::Approx(4.0));
}

TEST_CASE("particle balance at alpha = 0 and the conserved orders") {
  const MatrixXd v = gaussian_cloud(3, 3000, 21);
  const auto rows = steady_residuals(v, 0.2, {HalfInt(0), HalfInt::whole(1), HalfInt::whole(2)});
  CHECK(rows.size() == 3);
  const CoefficientSet cs = coefficients(v, 0.2);
  // Mass loss rate is alpha a.
  CHECK(rows[0].collision == doctest::Approx(-0.2 * cs.a).epsilon(1e-10));
  CHECK(std::abs(rows[0].residual) < 1e-10);
  CHECK(rows[1].collision == doctest::Approx(-0.2 * 1.5 * cs.b).epsilon(1e-10));
  const MomentVector ms = moments_of(v, HalfInt::whole(2));
  CHECK(rows[2].moment == doctest::Approx(ms.at(HalfInt::whole(2))));
  CHECK_THROWS_AS(steady_residuals(v, 0.0, {}), ValidationError);
}

TEST_CASE("tail estimator") {
  const MomentVector m = maxwellian_vector(3, 16);
  const TailEstimate t = tail_estimate(m, 2, 6);
  CHECK_FALSE(t.growth);
  CHECK_FALSE(t.noisy);
  CHECK(t.roots.size() == 5);
  double kmax = 0.0;
  for (int k = 2; k <= 6; ++k)
    kmax = std::max(kmax, std::pow(m.at(HalfInt(k)) / std::tgamma(k + 0.5), 1.0 / k));
  CHECK(t.K_hat == doctest::Approx(kmax));
  CHECK(t.A_est == doctest::Approx(1.0 / kmax));

  // Dilating velocities by lambda scales M_{k/2} by lambda^k and A_est by 1/lambda.
  MomentVector s = m;
  for (auto& [k, val] : s.entries) val *= std::pow(1.7, k.twice());
  CHECK(tail_estimate(s, 2, 6).A_est == doctest::Approx(t.A_est / 1.7));

  CHECK(tail_estimate(m, 2, 8).A_est == doctest::Approx(t.A_est).epsilon(0.15));

  // Algebraic tail (1 + r)^{-8} in d = 3, cut off at r = 1e3.
  MomentVector algebraic;
  for (int k = 0; k <= 8; ++k)
    algebraic.entries[HalfInt(k)] = quad::integrate(
        [k](double r) { return std::pow(r, k + 2.0) * std::pow(1.0 + r, -8.0); }, 0.0, 1e3, 1e-10);
  CHECK(tail_estimate(algebraic, 2, 6).growth);
  CHECK(tail_estimate(algebraic, 2, 8).K_hat > tail_estimate(algebraic, 2, 6).K_hat);

  MomentVector broken = m;
  broken.entries[HalfInt(4)] *= 3.0;
  CHECK(tail_estimate(broken, 2, 6).noisy);

  CHECK_THROWS_AS(tail_estimate(maxwellian_vector(3, 4), 2, 6), ValidationError);
  CHECK_THROWS_AS(tail_estimate(m, 3, 3), ValidationError);
}

TEST_CASE("equal-mass binning") {
  for (int d : {2, 3, 4}) {
    const RadialBinning b = maxwellian_binning(d, 20);
    CHECK(b.size() == 20);
    const Histogram h = maxwellian_histogram(b);
    for (Eigen::Index i = 0; i < b.size(); ++i) CHECK(h.mass[i] == doctest::Approx(0.05).epsilon(1e-8));
    CHECK(b.bin_of(0.0) == 0);
    CHECK(b.bin_of(1e3) == 19);
  }
  CHECK(default_bin_count(100000) == 47);
  CHECK(default_bin_count(1000) == 10);
  CHECK_THROWS_AS(maxwellian_binning(3, 1), ConfigError);

  const MatrixXd v = gaussian_cloud(3, 40000, 9);
  const Histogram h = histogram(v, maxwellian_binning(3, 10));
  CHECK(h.mass.sum() == doctest::Approx(1.0));
  for (Eigen::Index i = 0; i < 10; ++i) CHECK(std::abs(h.mass[i] - 0.1) < 4 * h.errors[i]);
}

TEST_CASE("weighted distances") {
  const RadialGrid g = RadialGrid::make(3, 48);
  const RadialDistribution m = maxwellian(g);
  const RadialDistribution f = test_density(g, "bimodal");
  const RadialDistribution e = test_density(g, "shell");
  CHECK(weighted_distance(m, m, 0.5, 2.0).value == 0.0);
  const double mf = weighted_distance(m, f, 0.2, 1.0).value, fm = weighted_distance(f, m, 0.2, 1.0).value;
  CHECK(mf == fm);
  CHECK(mf > 0.0);
  CHECK(weighted_distance(m, e, 0.2, 1.0).value <= mf + weighted_distance(f, e, 0.2, 1.0).value);
  CHECK(weighted_distance(m, f, 0.2, 1.0).value > weighted_distance(m, f, 0.0, 0.0).value);
  CHECK_THROWS_AS(weighted_distance(m, f, 4.0, 0.0), ConfigError);
  CHECK_THROWS_AS(weighted_distance(m, f, -1.0, 0.0), ValidationError);

  const RadialBinning b = maxwellian_binning(3, 16);
  const Histogram hm = maxwellian_histogram(b);
  const Histogram hf = histogram(f, b);
  const WeightedDistance wd = weighted_distance(hm, hf, 0.2, 0.0);
  CHECK(wd.value > 0.0);
  CHECK(wd.error == 0.0);
  CHECK(weighted_distance(hm, hm, 0.2, 1.0).value == 0.0);
  CHECK_THROWS_AS(weighted_distance(hm, hf, 1.5, 0.0), ConfigError);
  CHECK_THROWS_AS(weighted_distance(hm, histogram(f, maxwellian_binning(3, 8)), 0.0, 0.0), ValidationError);
}

TEST_CASE("concentration bound of the Maxwellian") {
  const RadialDistribution m = maxwellian(RadialGrid::make(3, 48));
  const double c = concentration_lower_bound(m);
  CHECK(c > 0.0);
  CHECK(c <= loss_intensity(m, 0.0) + 1e-12);
}
