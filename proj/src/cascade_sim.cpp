#include "gridcausal/cascade_sim.hpp"

#include "gridcausal/rng.hpp"
#include "gridcausal/util.hpp"

namespace gridcausal {

namespace {

FlowState solve(const GridCase& grid, const std::vector<int>& removed, bool use_dc,
                const AcOptions& ac) {
  return use_dc ? solve_dc(grid, removed) : solve_ac(grid, removed, ac);
}

std::vector<int> overloaded_lines(const GridCase& grid, const FlowState& flow,
                                  const LineLimits& limits, const std::vector<int>& removed) {
  std::vector<char> out(grid.n_lines(), 0);
  for (int r : removed) out[r] = 1;
  std::vector<int> over;
  for (int l = 0; l < grid.n_lines(); ++l)
    if (!out[l] && flow.p_line[l] >= limits.p_max[l]) over.push_back(l);
  return over;
}

struct CfsContext {
  const GridCase& grid;
  const LineLimits& limits;
  const LineUniverse& universe;
  int horizon;
  bool use_dc;
  AcOptions ac;
};

void record(std::vector<CascadeSequence>& out, std::vector<int> lines,
            std::vector<AnomalyVector> anomalies, TerminalReason reason) {
  CascadeSequence seq;
  seq.lines = std::move(lines);
  seq.stage_anomalies = std::move(anomalies);
  seq.terminal_reason = reason;
  seq.cost = cascade_cost(seq);
  out.push_back(std::move(seq));
}

// One CFS node: the last entry of `removed` was just taken out.
// Island check precedes the flow solve at every stage.
void expand_dependent(const CfsContext& ctx, std::vector<int>& removed,
                      std::vector<AnomalyVector>& anomalies, const FlowState& prev_flow,
                      std::vector<CascadeSequence>& out) {
  if (is_islanding(ctx.grid, removed)) {
    record(out, removed, anomalies, TerminalReason::islanded);
    return;
  }
  const FlowState flow = solve(ctx.grid, removed, ctx.use_dc, ctx.ac);
  if (!flow.converged) {
    record(out, removed, anomalies, TerminalReason::nonconvergence);
    return;
  }
  const int stage = static_cast<int>(removed.size());
  anomalies.push_back(anomaly_index(flow, prev_flow, ctx.limits, ctx.universe, stage));

  const std::vector<int> over = overloaded_lines(ctx.grid, flow, ctx.limits, removed);
  if (over.empty()) {
    record(out, removed, anomalies, TerminalReason::limits_ok);
  } else if (stage >= ctx.horizon) {
    record(out, removed, anomalies, TerminalReason::horizon);
  } else {
    for (int line : over) {
      removed.push_back(line);
      expand_dependent(ctx, removed, anomalies, flow, out);
      removed.pop_back();
    }
  }
  anomalies.pop_back();
}

// Worst-case node: branch over every remaining line. Only proper
// prefixes are pruned on islanding or a failed solve; a final removal
// that islands still yields a recorded depth-`horizon` sequence with
// its cost truncated at the previous stage.
void expand_worst(const CfsContext& ctx, std::vector<int>& removed,
                  std::vector<AnomalyVector>& anomalies, const FlowState& prev_flow,
                  std::vector<CascadeSequence>& out) {
  const int stage = static_cast<int>(removed.size());
  if (is_islanding(ctx.grid, removed)) {
    if (stage >= ctx.horizon) record(out, removed, anomalies, TerminalReason::islanded);
    return;
  }
  const FlowState flow = solve(ctx.grid, removed, ctx.use_dc, ctx.ac);
  if (!flow.converged) {
    if (stage >= ctx.horizon) record(out, removed, anomalies, TerminalReason::nonconvergence);
    return;
  }
  anomalies.push_back(anomaly_index(flow, prev_flow, ctx.limits, ctx.universe, stage));

  if (stage >= ctx.horizon) {
    record(out, removed, anomalies, TerminalReason::horizon);
  } else {
    std::vector<char> used(ctx.grid.n_lines(), 0);
    for (int r : removed) used[r] = 1;
    for (int line = 0; line < ctx.grid.n_lines(); ++line) {
      if (used[line]) continue;
      removed.push_back(line);
      expand_worst(ctx, removed, anomalies, flow, out);
      removed.pop_back();
    }
  }
  anomalies.pop_back();
}

GroundTruthSet run_enumeration(const GridCase& grid, const LineLimits& limits,
                               const LineUniverse& universe, int horizon, double load_scale,
                               const CfsOptions& options, bool worst_case) {
  const GridCase scaled = with_load_scale(grid, load_scale);
  const FlowState base = solve(scaled, {}, options.use_dc, options.ac);
  if (!base.converged)
    throw BaseCaseNonConvergence("base case at load scale " + std::to_string(load_scale) +
                                 " did not converge");

  CfsContext ctx{scaled, limits, universe, horizon, options.use_dc, options.ac};
  const int n_init = universe.size();
  std::vector<std::vector<CascadeSequence>> per_initiator(n_init);
  parallel_for(
      n_init,
      [&](int i) {
        std::vector<int> removed{universe.lines[i]};
        std::vector<AnomalyVector> anomalies;
        if (worst_case)
          expand_worst(ctx, removed, anomalies, base, per_initiator[i]);
        else
          expand_dependent(ctx, removed, anomalies, base, per_initiator[i]);
      },
      options.threads);

  GroundTruthSet set;
  set.horizon = horizon;
  set.case_id = grid.name;
  set.load_scale = load_scale;
  for (auto& bucket : per_initiator)
    for (auto& seq : bucket) set.sequences.push_back(std::move(seq));
  return set;
}

}  // namespace

GroundTruthSet enumerate_ground_truth(const GridCase& grid, const LineLimits& limits,
                                      const LineUniverse& universe, int horizon,
                                      double load_scale, const CfsOptions& options) {
  return run_enumeration(grid, limits, universe, horizon, load_scale, options, false);
}

GroundTruthSet enumerate_worst_case(const GridCase& grid, const LineLimits& limits,
                                    const LineUniverse& universe, int horizon, double load_scale,
                                    const CfsOptions& options) {
  return run_enumeration(grid, limits, universe, horizon, load_scale, options, true);
}

GroundTruthSet sample_stochastic_cascades(const GridCase& grid, const LineLimits& limits,
                                          const LineUniverse& universe, int horizon, int count,
                                          std::uint64_t seed, double load_scale) {
  const GridCase scaled = with_load_scale(grid, load_scale);
  const FlowState base = solve_dc(scaled, {});
  if (!base.converged)
    throw BaseCaseNonConvergence("base case did not converge for cascade sampling");

  GroundTruthSet set;
  set.horizon = horizon;
  set.case_id = grid.name;
  set.load_scale = load_scale;
  Rng rng(Rng::mix(seed, 0x5ca5cadeULL));

  for (int c = 0; c < count; ++c) {
    CascadeSequence seq;
    // Random N-2 initiating outage; simultaneous initial trips land in
    // consecutive stages, one line per stage, per the delta-t staging
    // convention.
    const int first = universe.lines[rng.below(universe.size())];
    int second = first;
    while (second == first) second = universe.lines[rng.below(universe.size())];
    seq.lines.push_back(first);
    int pending = horizon >= 2 ? second : -1;

    const FlowState* prev = &base;
    FlowState flow;
    while (true) {
      if (is_islanding(scaled, seq.lines)) {
        seq.terminal_reason = TerminalReason::islanded;
        break;
      }
      flow = solve_dc(scaled, seq.lines);
      const int stage = static_cast<int>(seq.lines.size());
      seq.stage_anomalies.push_back(anomaly_index(flow, *prev, limits, universe, stage));
      if (pending >= 0) {
        seq.lines.push_back(pending);
        pending = -1;
        prev = &flow;
        continue;
      }
      const std::vector<int> over = overloaded_lines(scaled, flow, limits, seq.lines);
      if (over.empty()) {
        seq.terminal_reason = TerminalReason::limits_ok;
        break;
      }
      if (stage >= horizon) {
        seq.terminal_reason = TerminalReason::horizon;
        break;
      }
      // Fractional-overload sampling over the overloaded lines.
      double total = 0.0;
      std::vector<double> weight(over.size());
      for (std::size_t i = 0; i < over.size(); ++i) {
        weight[i] = flow.p_line[over[i]] / limits.p_max[over[i]];
        total += weight[i];
      }
      double pick = rng.uniform() * total;
      std::size_t chosen = over.size() - 1;
      for (std::size_t i = 0; i < over.size(); ++i) {
        pick -= weight[i];
        if (pick <= 0.0) {
          chosen = i;
          break;
        }
      }
      seq.lines.push_back(over[chosen]);
      prev = &flow;
    }
    seq.cost = cascade_cost(seq);
    set.sequences.push_back(std::move(seq));
  }
  return set;
}

CascadeSequence replay_sequence(const GridCase& grid, const LineLimits& limits,
                                const LineUniverse& universe, const std::vector<int>& lines,
                                bool use_dc, const AcOptions& ac) {
  CascadeSequence seq;
  seq.lines = lines;
  seq.terminal_reason = TerminalReason::horizon;
  FlowState prev = solve(grid, {}, use_dc, ac);
  if (!prev.converged) {
    seq.terminal_reason = TerminalReason::nonconvergence;
    return seq;
  }
  std::vector<int> removed;
  for (std::size_t m = 0; m < lines.size(); ++m) {
    removed.push_back(lines[m]);
    if (is_islanding(grid, removed)) {
      seq.terminal_reason = TerminalReason::islanded;
      break;
    }
    FlowState flow = solve(grid, removed, use_dc, ac);
    if (!flow.converged) {
      seq.terminal_reason = TerminalReason::nonconvergence;
      break;
    }
    seq.stage_anomalies.push_back(
        anomaly_index(flow, prev, limits, universe, static_cast<int>(m + 1)));
    prev = std::move(flow);
  }
  seq.cost = cascade_cost(seq);
  return seq;
}

}  // namespace gridcausal
