#pragma once

#include "annihilation/experiments.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace annihilation {

nlohmann::json to_json(const MomentVector& ms);
nlohmann::json to_json(const CoefficientSet& cs);
nlohmann::json to_json(const TailEstimate& t);
nlohmann::json to_json(const std::vector<AuditCheck>& checks);
nlohmann::json to_json(const Histogram& h);

/// {alpha, d, moments, coefficients, audits, tail, residuals, ...}.
nlohmann::json moment_report(const SteadyProfile& p);

nlohmann::json to_json(const SweepResult& s);
nlohmann::json to_json(const UniquenessVerdict& v);
nlohmann::json to_json(const TailStudy& t);
nlohmann::json to_json(const SpectrumStudy& s);
nlohmann::json to_json(const NonlinearProbe& p);

/// Reads back the parts of a sweep report that later studies use
/// (moments, histograms, distances, flags).
SweepResult sweep_from_json(const nlohmann::json& j);

std::string sweep_csv(const SweepResult& s);
std::string uniqueness_csv(const UniquenessVerdict& v);
std::string tails_csv(const TailStudy& t);
std::string spectrum_csv(const SpectrumStudy& s);
std::string nonlinear_csv(const NonlinearProbe& p);

/// Prefixes "# config_hash=<hash>\n".
std::string with_hash(const std::string& csv, const std::string& hash);

}  // namespace annihilation
