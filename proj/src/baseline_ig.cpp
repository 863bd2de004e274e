#include "gridcausal/baseline_ig.hpp"

namespace gridcausal {

InfluenceGraph train_ig(const GroundTruthSet& sequences, const LineUniverse& universe) {
  InfluenceGraph ig;
  ig.universe = universe;
  const int n = universe.size();
  ig.counts = Eigen::MatrixXd::Zero(n, n);
  for (const auto& seq : sequences.sequences) {
    for (std::size_t m = 0; m + 1 < seq.lines.size(); ++m) {
      const int parent = universe.position(seq.lines[m]);
      const int child = universe.position(seq.lines[m + 1]);
      if (parent >= 0 && child >= 0) ig.counts(parent, child) += 1.0;
    }
  }
  ig.probs = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double row_sum = ig.counts.row(i).sum();
    if (row_sum > 0.0) ig.probs.row(i) = ig.counts.row(i) / row_sum;
  }
  return ig;
}

PredictionSet ig_predict(const InfluenceGraph& ig, const std::vector<int>& failed, double kappa) {
  const int n = ig.universe.size();
  std::vector<double> score(n, 0.0);
  bool all_zero = true;

  const int last = failed.empty() ? -1 : ig.universe.position(failed.back());
  if (last >= 0) {
    Eigen::VectorXd row = ig.probs.row(last);
    for (std::size_t i = 0; i + 1 < failed.size(); ++i) {
      const int p = ig.universe.position(failed[i]);
      if (p >= 0) row(p) = 0.0;
    }
    const double total = row.sum();
    if (total > 0.0) {
      all_zero = false;
      for (int p = 0; p < n; ++p) score[p] = row(p) / total;
    }
  }

  PredictionSet set;
  set.kappa = kappa;
  set.all_zero = all_zero;
  std::vector<char> failed_pos(n, 0);
  for (int line : failed) {
    const int p = ig.universe.position(line);
    if (p >= 0) failed_pos[p] = 1;
  }
  for (int p = 0; p < n; ++p)
    if (!failed_pos[p]) set.ranked.emplace_back(ig.universe.lines[p], score[p]);
  std::stable_sort(set.ranked.begin(), set.ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (all_zero) return set;
  const int cap = kappa_cap(n, kappa);
  for (const auto& [line, value] : set.ranked) {
    if (static_cast<int>(set.selected.size()) >= cap) break;
    if (value <= 0.0) break;
    set.selected.push_back(line);
  }
  return set;
}

std::vector<std::vector<int>> ig_explore(const InfluenceGraph& ig, double kappa, int horizon) {
  return explore_sequences(
      ig.universe,
      [&](const std::vector<int>& failed, double kp) { return ig_predict(ig, failed, kp); },
      kappa, horizon);
}

RankedSequences ig_cci(const InfluenceGraph& ig, const GridCase& grid, const LineLimits& limits,
                       double kappa, int horizon, int d, const CciOptions& options) {
  const auto candidates = ig_explore(ig, kappa, horizon);
  return rank_candidates_by_cost(candidates, grid, limits, ig.universe, d, options);
}

}  // namespace gridcausal
