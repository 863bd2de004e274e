#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "gridcausal/grid_io.hpp"
#include "gridcausal/power_flow.hpp"

namespace gridcausal {

/// The set of lines anomaly vectors and causal models range over.
/// Positions 0..size()-1 map to branch indices in `lines`. The working
/// universe is the non-islanding line set of the intact network; the
/// trivial all-lines universe recovers plain per-line indexing.
struct LineUniverse {
  std::vector<int> lines;  // ascending branch indices
  std::vector<int> pos;    // branch index -> position, -1 if absent

  int size() const { return static_cast<int>(lines.size()); }
  bool contains(int line) const {
    return line >= 0 && line < static_cast<int>(pos.size()) && pos[line] >= 0;
  }
  int position(int line) const { return contains(line) ? pos[line] : -1; }

  static LineUniverse over(std::vector<int> line_indices, int n_total);
  static LineUniverse all(int n_total);
  static LineUniverse non_islanding(const GridCase& grid);

  bool operator==(const LineUniverse&) const = default;
};

/// Normalized flow deviation per universe line for one cascade stage.
struct AnomalyVector {
  std::vector<double> s;
  int stage = 0;
};

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyTruth : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ZeroTruthCost : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// s[i] = (p_now[i] - p_prev[i]) / p_max[i] over the universe lines.
AnomalyVector anomaly_index(const FlowState& p_now, const FlowState& p_prev,
                            const LineLimits& limits, const LineUniverse& universe,
                            int stage = 0);

/// Discretized failure states, levels 1..T with level 1 = healthy.
struct DiscreteAnomalyState {
  std::vector<int> levels;
  int t_levels = 2;
};

/// For T = 2 a line is in outage (level 2) iff its flow reached the
/// limit or it has been removed. For T > 2 the outage levels 2..T are
/// graded by |s| against `thresholds` (ascending, size T-2).
DiscreteAnomalyState discretize(const AnomalyVector& s, const FlowState& flows,
                                const LineLimits& limits, const LineUniverse& universe,
                                const std::vector<int>& removed_lines, int t_levels = 2,
                                const std::vector<double>& thresholds = {});

enum class TerminalReason { limits_ok, islanded, horizon, nonconvergence };

std::string to_string(TerminalReason reason);
TerminalReason terminal_reason_from_string(const std::string& text);

/// One dependent failure sequence: the failed line per stage plus the
/// anomaly vector of every stage that had a valid post-removal solve
/// (a final islanding or non-converging removal has none).
struct CascadeSequence {
  std::vector<int> lines;
  std::vector<AnomalyVector> stage_anomalies;
  double cost = 0.0;
  TerminalReason terminal_reason = TerminalReason::limits_ok;
};

double cascade_cost(const CascadeSequence& seq);

/// Stagewise hit rate of predicted sets against one truth sequence.
/// predicted[j] is the set offered for stage j+2; truncated truth
/// averages over the realized stages only.
double precision(const std::vector<std::vector<int>>& predicted, const CascadeSequence& truth);

/// 1 - sum(predicted costs) / sum(truth costs).
double regret(const std::vector<double>& predicted_costs, const std::vector<double>& truth_costs);

}  // namespace gridcausal
