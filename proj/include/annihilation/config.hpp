#pragma once

#include "annihilation/experiments.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>

namespace annihilation {

struct ValidateOptions {
  std::string filter;        ///< substring of check names; empty runs all
  std::string inject_fault;  ///< "", "k3", "povzner" or "collision"
  std::int64_t carleman_samples = 200'000;
};

struct OutputOptions {
  std::string dir;
  bool checkpoint = true;
};

/// Everything a command needs. Serialized as
///   {solver, init, study, validate, output, workers}
/// with unknown keys rejected at every level.
struct RunConfig {
  StudyConfig study;  ///< owns solver, init and worker count
  ValidateOptions validate;
  OutputOptions output;
  std::string restore;  ///< checkpoint to continue from (simulate)

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);

  /// Override one key by dotted path, e.g. "solver.alpha=0.05". The value is
  /// read as JSON when it parses, otherwise as a string.
  void set(const std::string& assignment);

  /// FNV-1a of the canonical JSON without output and workers, which do not
  /// affect results.
  std::string hash() const;

  void validate_all() const;
};

RunConfig load_config(const std::string& path);

}  // namespace annihilation
