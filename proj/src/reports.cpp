#include "annihilation/reports.hpp"

#include <iomanip>
#include <sstream>

namespace annihilation {

using nlohmann::json;
using Eigen::Index;

namespace {

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

// Infinite last bin edge is stored as null.
json edges_json(const Eigen::VectorXd& e) {
  json out = json::array();
  for (Index i = 0; i < e.size(); ++i) out.push_back(std::isfinite(e[i]) ? json(e[i]) : json(nullptr));
  return out;
}

std::ostream& num(std::ostream& os) { return os << std::setprecision(12); }

}  // namespace

json to_json(const MomentVector& ms) {
  json values = json::object(), errors = json::object();
  for (const auto& [k, v] : ms.entries) {
    values[k.str()] = v;
    errors[k.str()] = ms.error(k);
  }
  return {{"values", values}, {"errors", errors}};
}

json to_json(const CoefficientSet& cs) {
  return {{"a", cs.a}, {"b", cs.b}, {"A", cs.A}, {"B", cs.B}, {"alpha", cs.alpha}, {"a_error", cs.a_error},
          {"b_error", cs.b_error}};
}

json to_json(const TailEstimate& t) {
  return {{"K_hat", t.K_hat},  {"A_est", t.A_est}, {"gamma", t.gamma},  {"k_range", {t.k_lo, t.k_hi}},
          {"k_argmax", t.k_argmax}, {"roots", t.roots}, {"growth", t.growth}, {"noisy", t.noisy}};
}

json to_json(const std::vector<AuditCheck>& checks) {
  json out = json::array();
  for (const auto& c : checks)
    out.push_back({{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"slack", c.slack}, {"sigma", c.sigma}, {"pass", c.pass}});
  return out;
}

json to_json(const Histogram& h) {
  return {{"d", h.binning.d}, {"edges", edges_json(h.binning.edges)}, {"centers", vec(h.binning.centers)},
          {"mass", vec(h.mass)}, {"errors", vec(h.errors)}};
}

json moment_report(const SteadyProfile& p) {
  json res = json::object();
  for (const auto& b : p.residuals)
    res[b.k.str()] = {{"moment", b.moment}, {"collision", b.collision}, {"residual", b.residual},
                      {"error", b.residual_error}, {"within_3_sigma", std::abs(b.residual) <= 3.0 * b.residual_error}};
  const auto& c = p.counters;
  return {{"alpha", p.alpha},
          {"d", p.d},
          {"n_particles", p.n_particles},
          {"timed_out", p.timed_out},
          {"t_detect", p.t_detect},
          {"window", {p.t_begin, p.t_end}},
          {"sub_windows", p.sub_windows},
          {"moments", to_json(p.moments)},
          {"coefficients", to_json(p.coefficients)},
          {"audits", to_json(p.audits)},
          {"audits_pass", all_pass(p.audits)},
          {"tail", to_json(p.tail)},
          {"residuals", res},
          {"annihilation_rate", {{"value", p.annihilation_rate}, {"error", p.annihilation_rate_error},
                                 {"alpha_a", p.alpha * p.coefficients.a}}},
          {"counters",
           {{"candidates", c.candidates}, {"collisions", c.collisions}, {"annihilations", c.annihilations},
            {"duplications", c.duplications}, {"rescalings", c.rescalings},
            {"majorant_overflows", c.majorant_overflows}, {"steps", c.steps}}}};
}

json to_json(const SweepResult& s) {
  json weights = json::array();
  for (const auto& w : s.weights) weights.push_back({w.a, w.k});
  json rows = json::array();
  for (const auto& r : s.rows) {
    json d = json::array();
    for (std::size_t w = 0; w < r.distances.size(); ++w)
      d.push_back({{"value", r.distances[w].value}, {"error", r.distances[w].error},
                   {"floor_subtracted", r.floor_subtracted[w]}});
    rows.push_back({{"alpha", r.alpha},
                    {"seed", r.seed},
                    {"distances", d},
                    {"audits_pass", r.audits_pass},
                    {"residuals_pass", r.residuals_pass},
                    {"histogram", to_json(r.profile.histogram)},
                    {"profile", moment_report(r.profile)}});
  }
  return {{"d", s.d},
          {"alphas", s.alphas},
          {"weights", weights},
          {"noise_floor",
           {{"n_particles", s.floor.n_particles}, {"n_bins", s.floor.n_bins}, {"replicas", s.floor.replicas},
            {"values", s.floor.values}, {"spreads", s.floor.spreads}}},
          {"rows", rows},
          {"fit", {{"slope", s.fit.slope}, {"intercept", s.fit.intercept}, {"correlation", s.fit.correlation}}},
          {"spearman", s.spearman},
          {"control_at_floor", s.control_at_floor},
          {"partial", s.partial}};
}

SweepResult sweep_from_json(const json& j) {
  try {
    SweepResult s;
    s.d = j.at("d").get<int>();
    s.alphas = j.at("alphas").get<std::vector<double>>();
    for (const auto& w : j.at("weights")) s.weights.push_back({w.at(0).get<double>(), w.at(1).get<double>()});
    const json& f = j.at("noise_floor");
    s.floor.n_particles = f.at("n_particles").get<Index>();
    s.floor.n_bins = f.at("n_bins").get<Index>();
    s.floor.replicas = f.at("replicas").get<int>();
    s.floor.values = f.at("values").get<std::vector<double>>();
    s.floor.spreads = f.at("spreads").get<std::vector<double>>();
    s.floor.weights = s.weights;
    for (const auto& r : j.at("rows")) {
      SweepRow row;
      row.alpha = r.at("alpha").get<double>();
      row.seed = r.at("seed").get<std::uint64_t>();
      row.audits_pass = r.at("audits_pass").get<bool>();
      row.residuals_pass = r.at("residuals_pass").get<bool>();
      for (std::size_t w = 0; w < r.at("distances").size(); ++w) {
        const json& d = r.at("distances")[w];
        row.distances.push_back({s.weights.at(w).a, s.weights.at(w).k, d.at("value").get<double>(),
                                 d.at("error").get<double>()});
        row.floor_subtracted.push_back(d.at("floor_subtracted").get<double>());
      }
      const json& h = r.at("histogram");
      RadialBinning b;
      b.d = h.at("d").get<int>();
      b.edges.resize(static_cast<Index>(h.at("edges").size()));
      for (Index i = 0; i < b.edges.size(); ++i) {
        const json& e = h.at("edges")[static_cast<std::size_t>(i)];
        b.edges[i] = e.is_null() ? std::numeric_limits<double>::infinity() : e.get<double>();
      }
      b.centers = vec_from(h.at("centers"));
      row.profile.histogram = Histogram{b, vec_from(h.at("mass")), vec_from(h.at("errors"))};
      const json& p = r.at("profile");
      row.profile.alpha = p.at("alpha").get<double>();
      row.profile.d = p.at("d").get<int>();
      row.profile.n_particles = p.at("n_particles").get<Index>();
      row.profile.timed_out = p.at("timed_out").get<bool>();
      const json& m = p.at("moments");
      for (const auto& [k, v] : m.at("values").items()) {
        const HalfInt hk = k.find('/') == std::string::npos ? HalfInt::whole(std::stoi(k)) : HalfInt(std::stoi(k));
        row.profile.moments.entries[hk] = v.get<double>();
        row.profile.moments.errors[hk] = m.at("errors").at(k).get<double>();
      }
      const json& c = p.at("coefficients");
      row.profile.coefficients = CoefficientSet::from_ab(c.at("a").get<double>(), c.at("b").get<double>(), row.alpha,
                                                         s.d, c.at("a_error").get<double>(), c.at("b_error").get<double>());
      s.rows.push_back(std::move(row));
    }
    s.fit.slope = j.at("fit").at("slope").get<double>();
    s.fit.intercept = j.at("fit").at("intercept").get<double>();
    s.fit.correlation = j.at("fit").at("correlation").get<double>();
    s.spearman = j.at("spearman").get<double>();
    s.control_at_floor = j.at("control_at_floor").get<bool>();
    s.partial = j.at("partial").get<bool>();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("sweep report is malformed (") + e.what() + ")");
  }
}

json to_json(const UniquenessVerdict& v) {
  json weights = json::array();
  for (const auto& w : v.weights) weights.push_back({w.a, w.k});
  json profiles = json::array();
  for (const auto& p : v.profiles) profiles.push_back(moment_report(p));
  return {{"alpha", v.alpha},         {"inits", v.inits},   {"seeds", v.seeds},      {"weights", weights},
          {"distances", v.distances}, {"errors", v.errors}, {"pass", v.pass},        {"partial", v.partial},
          {"profiles", profiles}};
}

json to_json(const TailStudy& t) {
  json rows = json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"label", r.label}, {"alpha", r.alpha}, {"primary", to_json(r.primary)},
                    {"secondary", to_json(r.secondary)}, {"stable", r.stable}});
  return {{"rows", rows},          {"ratio", t.ratio},
          {"ratio_secondary", t.ratio_secondary}, {"ratio_max", t.ratio_max},
          {"all_positive", t.all_positive}, {"pass", t.pass},
          {"noisy", t.noisy}};
}

json to_json(const SpectrumStudy& s) {
  json rows = json::array();
  for (const auto& r : s.rows) {
    json ev = json::array();
    for (const auto& l : r.eigenvalues) ev.push_back({l.real(), l.imag()});
    rows.push_back({{"n", r.n},
                    {"ok", r.ok},
                    {"error", r.error},
                    {"kernel_dimension", r.kernel_dimension},
                    {"kernel_tolerance", r.kernel_tolerance},
                    {"nu", r.nu},
                    {"null_max", r.null_max},
                    {"asymmetry", r.asymmetry},
                    {"eigenvalues", ev}});
  }
  return {{"rows", rows}, {"drift", s.drift}, {"pass", s.pass}};
}

json to_json(const NonlinearProbe& p) {
  json rows = json::array();
  for (const auto& r : p.rows)
    rows.push_back({{"alpha", r.alpha}, {"D", r.D}, {"D_error", r.D_error}, {"D2", r.D * r.D}, {"fitted", r.fitted},
                    {"residual", r.residual}, {"within", r.within}});
  return {{"weight", {p.weight.a, p.weight.k}},
          {"rows", rows},
          {"c1", p.c1},
          {"c2", p.c2},
          {"linear", {{"slope", p.linear.slope}, {"intercept", p.linear.intercept}, {"correlation", p.linear.correlation}}},
          {"residuals_within", p.residuals_within}};
}

std::string sweep_csv(const SweepResult& s) {
  std::ostringstream os;
  num(os) << "kind,alpha";
  for (const auto& w : s.weights) os << ",D_" << w.label() << ",err_" << w.label() << ",sub_" << w.label();
  os << ",audits_pass,residuals_pass,timed_out\n";
  os << "noise_floor,";
  for (std::size_t w = 0; w < s.weights.size(); ++w) os << ',' << s.floor.values[w] << ',' << s.floor.spreads[w] << ',';
  os << ",,,\n";
  for (const auto& r : s.rows) {
    os << "alpha," << r.alpha;
    for (std::size_t w = 0; w < r.distances.size(); ++w)
      os << ',' << r.distances[w].value << ',' << r.distances[w].error << ',' << r.floor_subtracted[w];
    os << ',' << r.audits_pass << ',' << r.residuals_pass << ',' << r.profile.timed_out << '\n';
  }
  return os.str();
}

std::string uniqueness_csv(const UniquenessVerdict& v) {
  std::ostringstream os;
  num(os) << "alpha,inits,weight_a,weight_k,distance,error,ratio,pass\n";
  std::string inits;
  for (const auto& i : v.inits) inits += (inits.empty() ? "" : "|") + i;
  for (std::size_t w = 0; w < v.weights.size(); ++w)
    os << v.alpha << ",\"" << inits << "\"," << v.weights[w].a << ',' << v.weights[w].k << ',' << v.distances[w] << ','
       << v.errors[w] << ',' << (v.errors[w] > 0.0 ? v.distances[w] / v.errors[w] : 0.0) << ','
       << (v.distances[w] <= 3.0 * v.errors[w]) << '\n';
  return os.str();
}

std::string tails_csv(const TailStudy& t) {
  std::ostringstream os;
  num(os) << "label,alpha,K_hat,A_est,k_lo,k_hi,k_argmax,A_est_secondary,k_lo_secondary,k_hi_secondary,stable,growth,noisy\n";
  for (const auto& r : t.rows)
    os << r.label << ',' << r.alpha << ',' << r.primary.K_hat << ',' << r.primary.A_est << ',' << r.primary.k_lo << ','
       << r.primary.k_hi << ',' << r.primary.k_argmax << ',' << r.secondary.A_est << ',' << r.secondary.k_lo << ','
       << r.secondary.k_hi << ',' << r.stable << ',' << (r.primary.growth || r.secondary.growth) << ','
       << (r.primary.noisy || r.secondary.noisy) << '\n';
  return os.str();
}

std::string spectrum_csv(const SpectrumStudy& s) {
  std::ostringstream os;
  num(os) << "n,ok,kernel_dimension,kernel_tolerance,nu,null_max,asymmetry\n";
  for (const auto& r : s.rows)
    os << r.n << ',' << r.ok << ',' << r.kernel_dimension << ',' << r.kernel_tolerance << ',' << r.nu << ','
       << r.null_max << ',' << r.asymmetry << '\n';
  return os.str();
}

std::string nonlinear_csv(const NonlinearProbe& p) {
  std::ostringstream os;
  num(os) << "alpha,D,D_error,D2,fitted,residual,within\n";
  for (const auto& r : p.rows)
    os << r.alpha << ',' << r.D << ',' << r.D_error << ',' << r.D * r.D << ',' << r.fitted << ',' << r.residual << ','
       << r.within << '\n';
  return os.str();
}

std::string with_hash(const std::string& csv, const std::string& hash) { return "# config_hash=" + hash + "\n" + csv; }

}  // namespace annihilation
