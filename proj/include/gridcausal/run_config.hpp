#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridcausal {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Every knob the paper leaves unspecified lives here so runs are
/// auditable: limit rule, profile shape, learner settings, prediction
/// budget and simulation scales.
struct RunConfig {
  std::string case_path;

  // limits
  double alpha = 1.3;
  double floor_mw = 1.0;

  // profile
  int steps = 2000;
  double lo = 0.90;
  double hi = 1.10;
  int kernel_window = 5;

  // lingam
  double tau = 0.05;
  std::uint64_t seed = 7;

  // predict
  std::vector<double> kappas = {15, 20, 25, 30, 35};
  int max_path_len = 3;
  int horizon = 4;
  int top_d = 100;

  // simulate
  std::vector<double> load_scales = {1.0};
  int ig_sequences = 10000;
  bool worst_case_dc = true;
  bool enforce_q_limits = false;
  int threads = 0;

  std::string out_dir = "out";
};

/// Flat key-value sections:  [section]  then  key = value  lines,
/// '#' or ';' comments. Unknown keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

/// Checks invariants and referenced paths; throws ConfigError.
void validate(const RunConfig& config);

std::string describe(const RunConfig& config);

}  // namespace gridcausal
