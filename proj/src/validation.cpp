#include "annihilation/validation.hpp"

#include "annihilation/kinematics.hpp"
#include "annihilation/quadrature.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace annihilation {

using Eigen::Index;
using Eigen::VectorXd;

std::vector<std::string> test_density_names() { return {"bimodal", "exponential", "shell"}; }

RadialDistribution test_density(const RadialGrid& grid, const std::string& name) {
  const int d = grid.d;
  const auto gauss = [d](double r, double temp) {
    return std::pow(std::numbers::pi * temp, -0.5 * d) * std::exp(-r * r / temp);
  };
  std::function<double(double)> f;
  if (name == "bimodal") {
    f = [gauss](double r) { return 0.5 * gauss(r, 0.5) + 0.5 * gauss(r, 1.5); };
  } else if (name == "exponential") {
    f = [](double r) { return std::exp(-2.0 * r); };
  } else if (name == "shell") {
    f = [](double r) { return r * r * std::exp(-r * r); };
  } else {
    throw ValidationError("test_density: unknown name '" + name + "'");
  }
  RadialDistribution out = RadialDistribution::from_function(grid, f);
  out.values /= out.mass();
  return out;
}

namespace {

struct Check {
  std::string name;
  std::function<CheckResult(const ValidateOptions&)> run;
};

CheckResult result(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value <= threshold, value, threshold, std::move(detail)};
}

double max_rel(const VectorXd& a, const VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

std::vector<Check> make_checks() {
  std::vector<Check> c;

  c.push_back({"povzner_anchor", [](const ValidateOptions& o) {
                 double rho = povzner_coefficient(3, HalfInt(3));
                 if (o.inject_fault == "povzner") rho += 1e-6;
                 const double a0 = (1.0 - rho) / (1.5 - rho);
                 const double err = std::max(std::abs(rho - 0.8), std::abs(a0 - 2.0 / 7.0));
                 std::ostringstream os;
                 os << std::setprecision(15) << "rho_3/2 = " << rho << ", alpha0 = " << a0;
                 return result("povzner_anchor", err, 1e-10, os.str());
               }});

  c.push_back({"povzner_closed_form_vs_quadrature", [](const ValidateOptions&) {
                 double worst = 0.0;
                 for (int tw = 1; tw <= 10; ++tw)
                   worst = std::max(worst, std::abs(2.0 / (0.5 * tw + 1.0) - povzner_coefficient_quadrature(3, HalfInt(tw))));
                 return result("povzner_closed_form_vs_quadrature", worst, 1e-8);
               }});

  c.push_back({"povzner_table_shape", [](const ValidateOptions&) {
                 double worst = 0.0;
                 std::string why;
                 for (int d : {2, 3, 4}) {
                   const PovznerTable t = povzner_table(d, HalfInt(6));
                   worst = std::max(worst, std::abs(t.entries.at(HalfInt(0)) - 2.0));
                   worst = std::max(worst, std::abs(t.entries.at(HalfInt(2)) - 1.0));
                   for (int tw = 2; tw < 6; ++tw)
                     if (!(t.entries.at(HalfInt(tw + 1)) < t.entries.at(HalfInt(tw)))) {
                       worst = 1.0;
                       why = "not decreasing in d = " + std::to_string(d);
                     }
                 }
                 return result("povzner_table_shape", worst, 1e-10, why);
               }});

  c.push_back({"alpha_thresholds", [](const ValidateOptions&) {
                 const AlphaThresholds t = alpha_thresholds(3);
                 const double formula = 2.0 * std::sqrt(2.0) / (4.0 * std::sqrt(2.0) + 3.0 * (std::sqrt(2.0) - 1.0));
                 bool decreasing = true;
                 for (int d = 2; d < 12; ++d) decreasing = decreasing && alpha_thresholds(d + 1).alpha2 < alpha_thresholds(d).alpha2;
                 const double err = std::max(std::abs(t.alpha0 - 2.0 / 7.0), std::abs(t.alpha2 - formula)) + (decreasing ? 0.0 : 1.0);
                 std::ostringstream os;
                 os << std::setprecision(6) << "alpha2(3) = " << t.alpha2 << " by formula; published value 0.401";
                 return result("alpha_thresholds", err, 1e-12, os.str());
               }});

  c.push_back({"collision_conservation", [](const ValidateOptions& o) {
                 Rng rng(20240601);
                 double worst = 0.0;
                 for (int d : {2, 3, 4})
                   for (int i = 0; i < 100'000; ++i) {
                     VectorXd v(d), w(d);
                     for (int q = 0; q < d; ++q) v[q] = rng.normal(), w[q] = rng.normal();
                     const VectorXd s = random_unit_vector(rng, d);
                     auto [vp, wp] = post_collision(v, w, s);
                     if (o.inject_fault == "collision") vp *= 1.0 + 1e-9;
                     const double e0 = v.squaredNorm() + w.squaredNorm();
                     const double p0 = (v + w).norm() + std::sqrt(e0);
                     worst = std::max({worst, std::abs(vp.squaredNorm() + wp.squaredNorm() - e0) / e0,
                                       (vp + wp - v - w).norm() / p0,
                                       std::abs((vp - wp).norm() - (v - w).norm()) / std::sqrt(e0)});
                   }
                 return result("collision_conservation", worst, 1e-12, "100000 frames in each of d = 2, 3, 4");
               }});

  c.push_back({"collision_special_cases", [](const ValidateOptions&) {
                 const Eigen::Vector3d v(1, 0, 0), w(-1, 0, 0), s(0, 1, 0);
                 auto [a, b] = post_collision(v, w, s);
                 double err = (a - Eigen::Vector3d(0, 1, 0)).norm() + (b - Eigen::Vector3d(0, -1, 0)).norm();
                 const Eigen::Vector3d x(0.3, -1.2, 0.7), y(-0.4, 0.1, 2.0);
                 auto [c1, c2] = post_collision(x, y, Eigen::Vector3d((x - y).normalized()));
                 err += (c1 - x).norm() + (c2 - y).norm();
                 return result("collision_special_cases", err, 1e-14);
               }});

  c.push_back({"loss_kernel_d3", [](const ValidateOptions& o) {
                 Rng rng(77);
                 double worst = 0.0;
                 for (double r : {0.05, 0.2, 1.0, 2.5, 5.0})
                   for (double rp : {0.1, 0.5, 1.0, 3.0}) {
                     double k = loss_kernel(3, r, rp);
                     if (o.inject_fault == "k3") k *= 1.01;
                     const int n = 100'000;
                     double s = 0.0, s2 = 0.0;
                     for (int i = 0; i < n; ++i) {
                       const VectorXd w = random_unit_vector(rng, 3);
                       const double x = std::sqrt(r * r + rp * rp - 2.0 * r * rp * w[0]);
                       s += x;
                       s2 += x * x;
                     }
                     const double m = s / n, se = std::sqrt(std::max(s2 / n - m * m, 0.0) / n);
                     worst = std::max(worst, std::abs(k - m) / se);
                   }
                 return result("loss_kernel_d3", worst, 3.0, "worst deviation in standard errors over a log grid");
               }});

  c.push_back({"loss_kernel_anchor", [](const ValidateOptions& o) {
                 double k = loss_kernel(3, 1.0, 1.0);
                 if (o.inject_fault == "k3") k *= 1.01;
                 return result("loss_kernel_anchor", std::abs(k - 4.0 / 3.0), 1e-12, "K_3(1,1) = 4/3");
               }});

  c.push_back({"maxwellian_moments", [](const ValidateOptions&) {
                 const RadialDistribution m = maxwellian(RadialGrid::make(3, 48));
                 const MomentVector ms = moments_of(m, HalfInt(4));
                 double worst = 0.0;
                 for (int tw = 0; tw <= 4; ++tw) {
                   const double exact = std::tgamma(0.5 * tw + 1.5) / std::tgamma(1.5);
                   worst = std::max(worst, std::abs(ms.at(HalfInt(tw)) - exact) / exact);
                 }
                 return result("maxwellian_moments", worst, 1e-6);
               }});

  c.push_back({"a_maxwellian_oracle", [](const ValidateOptions&) {
                 const CoefficientSet cs = coefficients(maxwellian(RadialGrid::make(3, 48)), 0.0);
                 Rng rng(5);
                 const int n = 1'000'000;
                 double s = 0.0, s2 = 0.0;
                 for (int i = 0; i < n; ++i) {
                   double q = 0.0;
                   for (int c = 0; c < 3; ++c) {
                     const double z = std::sqrt(0.5) * (rng.normal() - rng.normal());
                     q += z * z;
                   }
                   s += std::sqrt(q);
                   s2 += q;
                 }
                 const double m = s / n, se = std::sqrt((s2 / n - m * m) / n);
                 std::ostringstream os;
                 os << std::setprecision(8) << "a = " << cs.a << ", Monte Carlo " << m << " +- " << se;
                 return result("a_maxwellian_oracle", std::abs(cs.a - m) / se, 3.0, os.str());
               }});

  c.push_back({"coefficient_identities", [](const ValidateOptions&) {
                 const RadialGrid g = RadialGrid::make(3, 48);
                 double worst = 0.0;
                 for (const auto& name : test_density_names())
                   for (double alpha : {0.0, 0.05, 0.3}) {
                     const CoefficientSet cs = coefficients(test_density(g, name), alpha);
                     worst = std::max({worst, std::abs(3 * cs.B - cs.A - alpha * cs.a), std::abs(5 * cs.B - cs.A - alpha * cs.b)});
                     if (alpha == 0.0) worst = std::max({worst, std::abs(cs.A), std::abs(cs.B)});
                   }
                 return result("coefficient_identities", worst, 1e-14);
               }});

  c.push_back({"audit_maxwellian", [](const ValidateOptions&) {
                 const RadialDistribution m = maxwellian(RadialGrid::make(3, 48));
                 const auto checks = audit_bounds(moments_of(m, HalfInt(3)), coefficients(m, 0.0), 3);
                 std::string failed;
                 for (const auto& a : checks)
                   if (!a.pass) failed += a.name + "; ";
                 return result("audit_maxwellian", failed.empty() ? 0.0 : 1.0, 0.0, failed);
               }});

  c.push_back({"equilibrium_identity", [](const ValidateOptions&) {
                 const RadialDistribution m = maxwellian(RadialGrid::make(3, 48));
                 const VectorXd gain = gain_nodes(m, m);
                 const VectorXd loss = m.values.cwiseProduct(loss_intensity_nodes(m));
                 return result("equilibrium_identity", max_rel(gain, loss), 5e-3, "relative to the largest node value");
               }});

  c.push_back({"collisional_identities", [](const ValidateOptions&) {
                 const RadialGrid g = RadialGrid::make(3, 48);
                 double worst_mass = 0.0, worst_energy = 0.0;
                 for (const auto& name : test_density_names()) {
                   const RadialDistribution f = test_density(g, name);
                   const VectorXd gain = gain_nodes(f, f);
                   const VectorXd loss = f.values.cwiseProduct(loss_intensity_nodes(f));
                   const VectorXd r2 = g.nodes.cwiseAbs2();
                   const double gm = g.weights.dot(gain), lm = g.weights.dot(loss);
                   const double ge = g.weights.dot(gain.cwiseProduct(r2)), le = g.weights.dot(loss.cwiseProduct(r2));
                   worst_mass = std::max(worst_mass, std::abs(gm - lm) / lm);
                   worst_energy = std::max(worst_energy, std::abs(ge - le) / le);
                 }
                 std::ostringstream os;
                 os << std::setprecision(3) << "mass " << worst_mass << ", energy " << worst_energy;
                 return result("collisional_identities", std::max(worst_mass / 5e-3, worst_energy / 1e-2), 1.0, os.str());
               }});

  c.push_back({"annihilation_operator", [](const ValidateOptions&) {
                 const RadialGrid g = RadialGrid::make(3, 48);
                 const RadialDistribution f = test_density(g, "bimodal");
                 const VectorXd loss = f.values.cwiseProduct(loss_intensity_nodes(f));
                 const double one = (annihilation_apply(f, 1.0).values + loss).cwiseAbs().maxCoeff();
                 const double a = coefficients(f, 0.0).a;
                 const double mass = g.weights.dot(annihilation_apply(f, 0.3).values);
                 const double rel = std::abs(mass + 0.3 * a) / (0.3 * a);
                 const RadialDistribution m = maxwellian(g);
                 const double zero = annihilation_apply(m, 0.0).values.cwiseAbs().maxCoeff() /
                                     m.values.cwiseProduct(loss_intensity_nodes(m)).maxCoeff();
                 std::ostringstream os;
                 os << std::setprecision(3) << "alpha=1 " << one << ", mass " << rel << ", alpha=0 on M " << zero;
                 return result("annihilation_operator", std::max({one / 1e-10, rel / 1e-2, zero / 5e-3}), 1.0, os.str());
               }});

  c.push_back({"carleman_oracle", [](const ValidateOptions& o) {
                 const RadialGrid g = RadialGrid::make(3, 48);
                 double worst = 0.0;
                 std::uint64_t seed = 11;
                 for (const RadialDistribution& f : {maxwellian(g), test_density(g, "bimodal")})
                   for (double r : {0.25, 0.75, 1.25, 2.0, 3.0}) {
                     const double direct = gain(f, f, r);
                     const MonteCarloEstimate mc = gain_carleman_mc(f, f, r, o.carleman_samples, seed++);
                     worst = std::max(worst, std::abs(direct - mc.value) / mc.std_error);
                   }
                 return result("carleman_oracle", worst, 3.0, "worst deviation in standard errors, 5 radii x 2 densities");
               }});

  c.push_back({"gamma_b", [](const ValidateOptions& o) {
                 const RadialGrid g = RadialGrid::make(3, 48);
                 const RadialDistribution f = maxwellian(g);
                 double worst = 0.0;
                 std::uint64_t seed = 31;
                 for (double r : {0.5, 1.0, 2.0}) {
                   const double direct = gamma_b_direct(f, r);
                   const double exact = std::pow(std::numbers::pi, -1.5) * std::exp(-r * r) / r;
                   const MonteCarloEstimate mc = gamma_b_carleman_mc(f, r, o.carleman_samples, seed++);
                   worst = std::max({worst, std::abs(direct - mc.value) / mc.std_error, std::abs(direct - exact) / exact / 1e-3});
                 }
                 return result("gamma_b", worst, 3.0);
               }});

  c.push_back({"linearized_spectrum", [](const ValidateOptions&) {
                 const SpectrumStudy s = spectral_gap_study({48, 96});
                 double asym = 0.0;
                 for (const auto& r : s.rows) asym = std::max(asym, r.asymmetry);
                 std::ostringstream os;
                 os << std::setprecision(5);
                 for (const auto& r : s.rows) os << "n=" << r.n << " kernel " << r.kernel_dimension << " nu " << r.nu << "; ";
                 os << "drift " << s.drift << ", asymmetry " << asym;
                 return result("linearized_spectrum", s.pass && asym <= 0.05 ? 0.0 : 1.0, 0.0, os.str());
               }});

  c.push_back({"tail_estimator", [](const ValidateOptions&) {
                 const MomentVector m = maxwellian_moments(3, HalfInt(10));
                 const TailEstimate t26 = tail_estimate(m, 2, 6), t28 = tail_estimate(m, 2, 8), t38 = tail_estimate(m, 3, 8);
                 const double refine = std::abs(t26.A_est - t28.A_est) / t26.A_est;
                 const double window = std::abs(t26.A_est - t38.A_est) / std::max(t26.A_est, t38.A_est);
                 MomentVector scaled;
                 for (const auto& [k, v] : m.entries) scaled.entries[k] = v * std::pow(2.0, k.twice());
                 const double dil = std::abs(tail_estimate(scaled, 2, 6).A_est * 2.0 - t26.A_est) / t26.A_est;
                 std::ostringstream os;
                 os << std::setprecision(4) << "refine " << refine << ", window " << window << ", dilation " << dil;
                 return result("tail_estimator", std::max({refine / 0.15, window / 0.2, dil / 1e-12}), 1.0, os.str());
               }});

  c.push_back({"dsmc_invariants", [](const ValidateOptions&) {
                 SolverConfig cfg;
                 cfg.n_particles = 2000;
                 cfg.alpha = 0.1;
                 ParticleEnsemble e = init_ensemble(InitSpec::parse("two_shells(1,2,0.5)"), 2000, 3, 9);
                 double worst = 0.0;
                 for (int s = 0; s < 20; ++s) {
                   step(e, cfg);
                   worst = std::max({worst, e.velocities.rowwise().mean().norm(),
                                     std::abs(e.velocities.squaredNorm() / 2000 - 1.5)});
                 }
                 ParticleEnsemble copy = load_checkpoint(save_checkpoint(e, cfg.alpha), 3);
                 step(e, cfg);
                 step(copy, cfg);
                 const bool same = e.velocities == copy.velocities && e.t == copy.t;
                 return result("dsmc_invariants", same ? worst : 1.0, 1e-12, same ? "" : "checkpoint round trip diverged");
               }});
  return c;
}

}  // namespace

std::vector<std::string> validation_check_names() {
  std::vector<std::string> names;
  for (const auto& c : make_checks()) names.push_back(c.name);
  return names;
}

std::vector<CheckResult> run_validation(const ValidateOptions& opts,
                                        const std::function<void(const CheckResult&, double)>& on_result) {
  std::vector<CheckResult> out;
  for (const auto& c : make_checks()) {
    if (!opts.filter.empty() && c.name.find(opts.filter) == std::string::npos) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = c.run(opts);
    } catch (const std::exception& e) {
      r = {c.name, false, 0.0, 0.0, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_result) on_result(r, secs);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace annihilation
