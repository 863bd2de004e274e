#include "gridcausal/dataset_gen.hpp"

#include <algorithm>

#include "gridcausal/rng.hpp"
#include "gridcausal/util.hpp"

namespace gridcausal {

LoadProfile make_load_profile(const GridCase& grid, int steps, double lo, double hi,
                              int kernel_window, std::uint64_t seed) {
  LoadProfile profile;
  for (int i = 0; i < static_cast<int>(grid.buses.size()); ++i)
    if (grid.buses[i].p_demand != 0.0 || grid.buses[i].q_demand != 0.0)
      profile.load_buses.push_back(i);

  const int n_loads = static_cast<int>(profile.load_buses.size());
  profile.steps.assign(steps, std::vector<double>(n_loads, 1.0));

  Rng rng(Rng::mix(seed, 0x10adULL));
  // Raw per-load series first, then a centered moving average with
  // edge clamping, re-clipped to [lo, hi].
  std::vector<double> raw(steps);
  const int half = kernel_window / 2;
  for (int j = 0; j < n_loads; ++j) {
    for (int t = 0; t < steps; ++t) raw[t] = rng.uniform(lo, hi);
    for (int t = 0; t < steps; ++t) {
      double sum = 0.0;
      for (int w = -half; w <= kernel_window - half - 1; ++w) {
        const int src = std::clamp(t + w, 0, steps - 1);
        sum += raw[src];
      }
      profile.steps[t][j] = std::clamp(sum / kernel_window, lo, hi);
    }
  }
  return profile;
}

namespace {

GridCase scaled_for_step(const GridCase& grid, const LoadProfile& profile, int step) {
  std::vector<double> factors(grid.buses.size(), 1.0);
  for (std::size_t j = 0; j < profile.load_buses.size(); ++j)
    factors[profile.load_buses[j]] = profile.steps[step][j];
  return with_load_scale(grid, factors);
}

}  // namespace

std::vector<FlowState> profile_base_flows(const GridCase& grid, const LoadProfile& profile,
                                          const AcOptions& ac, int threads) {
  std::vector<FlowState> flows(profile.steps.size());
  parallel_for(
      static_cast<int>(profile.steps.size()),
      [&](int t) { flows[t] = solve_ac(scaled_for_step(grid, profile, t), {}, ac); }, threads);
  return flows;
}

ObservationalDataset generate_observational(const GridCase& grid, const LineLimits& limits,
                                            int initiating_line, const LoadProfile& profile,
                                            const LineUniverse& universe,
                                            const std::vector<FlowState>* base_flows,
                                            const AcOptions& ac, int threads) {
  ObservationalDataset data;
  data.initiating_line = initiating_line;
  data.n_cols = universe.size();

  std::vector<FlowState> local_base;
  if (!base_flows) {
    local_base = profile_base_flows(grid, profile, ac, threads);
    base_flows = &local_base;
  }

  const int steps = static_cast<int>(profile.steps.size());
  const std::vector<int> removed{initiating_line};
  std::vector<std::vector<double>> rows(steps);
  std::vector<char> ok(steps, 0);
  parallel_for(
      steps,
      [&](int t) {
        const FlowState& base = (*base_flows)[t];
        if (!base.converged) return;
        const FlowState outage = solve_ac(scaled_for_step(grid, profile, t), removed, ac);
        if (!outage.converged) return;
        rows[t] = anomaly_index(outage, base, limits, universe, 1).s;
        ok[t] = 1;
      },
      threads);

  for (int t = 0; t < steps; ++t) {
    if (ok[t])
      data.rows.push_back(std::move(rows[t]));
    else
      ++data.dropped_steps;
  }
  if (static_cast<int>(data.rows.size()) < 10 * universe.size())
    throw TooFewValidRows("dataset for line " + std::to_string(initiating_line) + " kept " +
                          std::to_string(data.rows.size()) + " rows; need at least " +
                          std::to_string(10 * universe.size()));
  return data;
}

}  // namespace gridcausal
