#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridcausal/anomaly_metrics.hpp"
#include "gridcausal/grid_io.hpp"
#include "gridcausal/power_flow.hpp"

namespace gridcausal {

struct BaseCaseNonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GroundTruthSet {
  std::vector<CascadeSequence> sequences;
  int horizon = 0;
  std::string case_id;
  double load_scale = 1.0;
};

struct CfsOptions {
  bool use_dc = false;
  AcOptions ac;
  int threads = 0;

  static CfsOptions dc() {
    CfsOptions options;
    options.use_dc = true;
    return options;
  }
};

/// Depth-first enumeration of every dependent outage sequence: each
/// stage removes one line that was overloaded in the previous stage's
/// flow, and a branch ends on no-overload, islanding, non-convergence
/// or the horizon. Each root-to-leaf path is one recorded sequence.
GroundTruthSet enumerate_ground_truth(const GridCase& grid, const LineLimits& limits,
                                      const LineUniverse& universe, int horizon,
                                      double load_scale = 1.0, const CfsOptions& options = {});

/// Every no-repeat removal sequence of exactly `horizon` lines whose
/// prefixes all keep the network connected (and solvable), regardless
/// of overload causality. DC replay by default for speed.
GroundTruthSet enumerate_worst_case(const GridCase& grid, const LineLimits& limits,
                                    const LineUniverse& universe, int horizon,
                                    double load_scale = 1.0,
                                    const CfsOptions& options = CfsOptions::dc());

/// Stochastic DC cascades: a uniformly random non-islanding initiating
/// line, then one overloaded line per stage sampled with probability
/// proportional to its fractional overload.
GroundTruthSet sample_stochastic_cascades(const GridCase& grid, const LineLimits& limits,
                                          const LineUniverse& universe, int horizon, int count,
                                          std::uint64_t seed, double load_scale = 1.0);

/// Re-simulates a forced removal ordering from the base state,
/// recording per-stage anomalies and cost. Islanding or a failed solve
/// truncates at the last valid stage.
CascadeSequence replay_sequence(const GridCase& grid, const LineLimits& limits,
                                const LineUniverse& universe, const std::vector<int>& lines,
                                bool use_dc = false, const AcOptions& ac = {});

}  // namespace gridcausal
