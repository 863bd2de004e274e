#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gridcausal/anomaly_metrics.hpp"
#include "gridcausal/grid_io.hpp"
#include "gridcausal/power_flow.hpp"

namespace gridcausal {

/// Smooth stochastic load profile: one scale factor per load bus and
/// step, i.i.d. uniform in [lo, hi] then moving-average smoothed.
struct LoadProfile {
  std::vector<int> load_buses;              // bus positions with demand
  std::vector<std::vector<double>> steps;   // steps[t][j] for load_buses[j]
};

LoadProfile make_load_profile(const GridCase& grid, int steps, double lo, double hi,
                              int kernel_window, std::uint64_t seed);

struct TooFewValidRows : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Observational anomaly rows for one initiating line: row l compares
/// the flows with line k removed against the unfaulted flows at load
/// step l. Steps where either solve fails are dropped and counted.
struct ObservationalDataset {
  int initiating_line = -1;                 // branch index
  std::vector<std::vector<double>> rows;    // n_rows x universe size
  int n_cols = 0;
  int dropped_steps = 0;
};

/// Unfaulted flows per profile step, shareable across initiating lines.
std::vector<FlowState> profile_base_flows(const GridCase& grid, const LoadProfile& profile,
                                          const AcOptions& ac = {}, int threads = 0);

ObservationalDataset generate_observational(const GridCase& grid, const LineLimits& limits,
                                            int initiating_line, const LoadProfile& profile,
                                            const LineUniverse& universe,
                                            const std::vector<FlowState>* base_flows = nullptr,
                                            const AcOptions& ac = {}, int threads = 0);

}  // namespace gridcausal
