#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace cvxspec {

struct VerifyOptions {
  std::uint64_t seed = 1;
  bool negative_controls = false;
  /// Check names to run; empty runs all.
  std::vector<std::string> only;
};

struct CheckRow {
  std::string name;
  bool control = false;  // a negative control is expected to fail
  bool passed = false;
  std::string detail;

  bool as_expected() const { return passed != control; }
};

/// convexity, exponent-shift, derivative-stability, cone-probe, boundary-spike.
const std::vector<std::string>& verify_check_names();

/// Runs the property suite. Throws std::invalid_argument on unknown names.
std::vector<CheckRow> run_verify_suite(const VerifyOptions& opts = {});

std::string verify_table(const std::vector<CheckRow>& rows);
std::string verify_csv(const std::vector<CheckRow>& rows);
nlohmann::json verify_json(const std::vector<CheckRow>& rows);

}  // namespace cvxspec
