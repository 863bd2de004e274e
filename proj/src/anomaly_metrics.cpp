#include "gridcausal/anomaly_metrics.hpp"

#include <algorithm>
#include <cmath>

namespace gridcausal {

LineUniverse LineUniverse::over(std::vector<int> line_indices, int n_total) {
  LineUniverse u;
  u.lines = std::move(line_indices);
  std::sort(u.lines.begin(), u.lines.end());
  u.pos.assign(n_total, -1);
  for (int p = 0; p < static_cast<int>(u.lines.size()); ++p) u.pos[u.lines[p]] = p;
  return u;
}

LineUniverse LineUniverse::all(int n_total) {
  std::vector<int> lines(n_total);
  for (int i = 0; i < n_total; ++i) lines[i] = i;
  return over(std::move(lines), n_total);
}

LineUniverse LineUniverse::non_islanding(const GridCase& grid) {
  return over(non_islanding_lines(grid), grid.n_lines());
}

AnomalyVector anomaly_index(const FlowState& p_now, const FlowState& p_prev,
                            const LineLimits& limits, const LineUniverse& universe, int stage) {
  if (p_now.p_line.size() != p_prev.p_line.size() ||
      p_now.p_line.size() != limits.p_max.size())
    throw DimensionMismatch("flow states and limits cover different line counts");
  AnomalyVector out;
  out.stage = stage;
  out.s.resize(universe.size());
  for (int p = 0; p < universe.size(); ++p) {
    const int line = universe.lines[p];
    out.s[p] = (p_now.p_line[line] - p_prev.p_line[line]) / limits.p_max[line];
  }
  return out;
}

DiscreteAnomalyState discretize(const AnomalyVector& s, const FlowState& flows,
                                const LineLimits& limits, const LineUniverse& universe,
                                const std::vector<int>& removed_lines, int t_levels,
                                const std::vector<double>& thresholds) {
  DiscreteAnomalyState out;
  out.t_levels = t_levels;
  out.levels.assign(universe.size(), 1);
  std::vector<char> removed(limits.p_max.size(), 0);
  for (int r : removed_lines)
    if (r >= 0 && r < static_cast<int>(removed.size())) removed[r] = 1;
  for (int p = 0; p < universe.size(); ++p) {
    const int line = universe.lines[p];
    // Failures are persistent: a removed line stays in outage.
    const bool outage = removed[line] || flows.p_line[line] >= limits.p_max[line];
    if (!outage) continue;
    int level = 2;
    for (double th : thresholds)
      if (std::abs(s.s[p]) >= th) ++level;
    out.levels[p] = std::min(level, t_levels);
  }
  return out;
}

std::string to_string(TerminalReason reason) {
  switch (reason) {
    case TerminalReason::limits_ok: return "limits_ok";
    case TerminalReason::islanded: return "islanded";
    case TerminalReason::horizon: return "horizon";
    case TerminalReason::nonconvergence: return "nonconvergence";
  }
  return "limits_ok";
}

TerminalReason terminal_reason_from_string(const std::string& text) {
  if (text == "islanded") return TerminalReason::islanded;
  if (text == "horizon") return TerminalReason::horizon;
  if (text == "nonconvergence") return TerminalReason::nonconvergence;
  return TerminalReason::limits_ok;
}

double cascade_cost(const CascadeSequence& seq) {
  double total = 0.0;
  for (const auto& stage : seq.stage_anomalies)
    for (double v : stage.s) total += std::abs(v);
  return total;
}

double precision(const std::vector<std::vector<int>>& predicted, const CascadeSequence& truth) {
  const int stages = static_cast<int>(truth.lines.size());
  if (stages < 2) throw EmptyTruth("truth sequence has no stage beyond the initiating failure");
  const int realized = stages - 1;
  if (static_cast<int>(predicted.size()) < realized)
    throw DimensionMismatch("fewer prediction sets than realized stages");
  int hits = 0;
  for (int m = 0; m < realized; ++m) {
    const auto& set = predicted[m];
    if (std::find(set.begin(), set.end(), truth.lines[m + 1]) != set.end()) ++hits;
  }
  return static_cast<double>(hits) / realized;
}

double regret(const std::vector<double>& predicted_costs, const std::vector<double>& truth_costs) {
  double truth_sum = 0.0;
  for (double c : truth_costs) truth_sum += c;
  if (truth_sum <= 0.0) throw ZeroTruthCost("ground-truth top sequences have zero total cost");
  double predicted_sum = 0.0;
  for (double c : predicted_costs) predicted_sum += c;
  return 1.0 - predicted_sum / truth_sum;
}

}  // namespace gridcausal
