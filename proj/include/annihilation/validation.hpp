#pragma once

#include "annihilation/config.hpp"

#include <functional>
#include <string>
#include <vector>

namespace annihilation {

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;      ///< measured quantity
  double threshold = 0.0;  ///< pass bound on `value`
  std::string detail;
};

/// Names of the checks in the fast validation suite, in run order.
std::vector<std::string> validation_check_names();

/// Runs every check whose name contains `opts.filter`. A failing or
/// throwing check is recorded and the suite continues.
/// `on_result` is called after each check.
std::vector<CheckResult> run_validation(const ValidateOptions& opts,
                                        const std::function<void(const CheckResult&, double seconds)>& on_result = {});

/// Named test densities used by the identity checks (unit mass, d = grid.d).
RadialDistribution test_density(const RadialGrid& grid, const std::string& name);
std::vector<std::string> test_density_names();

}  // namespace annihilation
