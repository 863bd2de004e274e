#include "gridcausal/cascade_predict.hpp"

#include <algorithm>
#include <cmath>

#include "gridcausal/util.hpp"

namespace gridcausal {

int kappa_cap(int universe_size, double kappa) {
  return static_cast<int>(std::ceil(universe_size * kappa / 100.0));
}

InterventionState intervene(const CausalModelSet& models, const std::vector<int>& failed) {
  if (failed.empty()) throw UnknownInitiator("empty failure sequence");
  const int last = failed.back();
  const auto it = models.models.find(last);
  if (it == models.models.end())
    throw UnknownInitiator("no causal model for line " + std::to_string(last));

  InterventionState state;
  state.failed = failed;
  state.universe = models.universe;
  state.b = it->second.b;
  // Prior failures can no longer be affected by their parents.
  for (std::size_t i = 0; i + 1 < failed.size(); ++i) {
    const int pos = state.universe.position(failed[i]);
    if (pos >= 0) state.b.row(pos).setZero();
  }
  return state;
}

TotalEffects total_causal_effects(const InterventionState& state, int max_path_len) {
  const int n = state.universe.size();
  TotalEffects out;
  out.d.assign(n, 0.0);

  const int source = state.universe.position(state.failed.back());
  if (source < 0) return out;

  std::vector<char> failed_pos(n, 0);
  for (int line : state.failed) {
    const int p = state.universe.position(line);
    if (p >= 0) failed_pos[p] = 1;
  }

  // Out-edges of node v are the nonzero entries of column v: b(u, v) is
  // the coefficient of the edge v -> u.
  std::vector<std::vector<std::pair<int, double>>> children(n);
  for (int v = 0; v < n; ++v)
    for (int u = 0; u < n; ++u)
      if (state.b(u, v) != 0.0) children[v].emplace_back(u, state.b(u, v));

  // Signed path sums over simple directed paths from the source.
  std::vector<double> path_sum(n, 0.0);
  std::vector<char> on_path(n, 0);
  on_path[source] = 1;
  auto dfs = [&](auto&& self, int node, double product, int depth) -> void {
    if (depth >= max_path_len) return;
    for (const auto& [child, coeff] : children[node]) {
      if (on_path[child]) continue;
      const double value = product * coeff;
      path_sum[child] += value;
      on_path[child] = 1;
      self(self, child, value, depth + 1);
      on_path[child] = 0;
    }
  };
  dfs(dfs, source, 1.0, 0);

  double total = 0.0;
  for (int p = 0; p < n; ++p) {
    if (failed_pos[p]) {
      path_sum[p] = 0.0;
      continue;
    }
    path_sum[p] = std::abs(path_sum[p]);
    total += path_sum[p];
  }
  if (total <= 0.0) return out;  // AllZero marker
  for (int p = 0; p < n; ++p) out.d[p] = path_sum[p] / total;
  out.all_zero = false;
  return out;
}

namespace {

PredictionSet select_top(const LineUniverse& universe, const std::vector<int>& failed,
                         const std::vector<double>& score, bool all_zero, double kappa) {
  PredictionSet set;
  set.kappa = kappa;
  set.all_zero = all_zero;

  std::vector<char> failed_pos(universe.size(), 0);
  for (int line : failed) {
    const int p = universe.position(line);
    if (p >= 0) failed_pos[p] = 1;
  }
  for (int p = 0; p < universe.size(); ++p)
    if (!failed_pos[p]) set.ranked.emplace_back(universe.lines[p], score[p]);

  std::stable_sort(set.ranked.begin(), set.ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  if (all_zero) return set;
  const int cap = kappa_cap(universe.size(), kappa);
  for (const auto& [line, value] : set.ranked) {
    if (static_cast<int>(set.selected.size()) >= cap) break;
    if (value <= 0.0) break;
    set.selected.push_back(line);
  }
  return set;
}

}  // namespace

PredictionSet c_path(const CausalModelSet& models, const std::vector<int>& failed, double kappa,
                     int max_path_len) {
  const InterventionState state = intervene(models, failed);
  const TotalEffects effects = total_causal_effects(state, max_path_len);
  return select_top(models.universe, failed, effects.d, effects.all_zero, kappa);
}

std::vector<std::vector<int>> explore_sequences(const LineUniverse& universe,
                                                const NextFailurePredictor& predict, double kappa,
                                                int horizon) {
  std::vector<std::vector<int>> all;
  std::vector<int> chain;
  auto grow = [&](auto&& self) -> void {
    if (static_cast<int>(chain.size()) >= horizon) {
      all.push_back(chain);
      return;
    }
    const PredictionSet next = predict(chain, kappa);
    if (next.selected.empty()) {
      all.push_back(chain);  // early termination: sparse model
      return;
    }
    for (int line : next.selected) {
      chain.push_back(line);
      self(self);
      chain.pop_back();
    }
  };
  for (int line : universe.lines) {
    chain.assign(1, line);
    grow(grow);
  }
  return all;
}

std::vector<std::vector<int>> cci_explore(const CausalModelSet& models, double kappa, int horizon,
                                          int max_path_len) {
  // Initiating lines are restricted to those with a learned model.
  std::vector<int> initiators;
  for (const auto& [line, model] : models.models) initiators.push_back(line);
  const LineUniverse init =
      LineUniverse::over(initiators, static_cast<int>(models.universe.pos.size()));
  return explore_sequences(
      init,
      [&](const std::vector<int>& failed, double kp) {
        return c_path(models, failed, kp, max_path_len);
      },
      kappa, horizon);
}

RankedSequences rank_candidates_by_cost(const std::vector<std::vector<int>>& candidates,
                                        const GridCase& grid, const LineLimits& limits,
                                        const LineUniverse& universe, int d,
                                        const CciOptions& options) {
  std::vector<CascadeSequence> replayed(candidates.size());
  parallel_for(
      static_cast<int>(candidates.size()),
      [&](int i) {
        replayed[i] =
            replay_sequence(grid, limits, universe, candidates[i], options.use_dc_replay,
                            options.ac);
      },
      options.threads);

  std::stable_sort(replayed.begin(), replayed.end(),
                   [](const CascadeSequence& a, const CascadeSequence& b) {
                     if (a.cost != b.cost) return a.cost > b.cost;
                     return a.lines < b.lines;
                   });

  RankedSequences out;
  out.candidate_count = static_cast<int>(replayed.size());
  out.short_of_d = out.candidate_count < d;
  const int take = std::min<int>(d, out.candidate_count);
  out.top.assign(replayed.begin(), replayed.begin() + take);
  return out;
}

RankedSequences cci(const CausalModelSet& models, const GridCase& grid, const LineLimits& limits,
                    double kappa, int horizon, int d, const CciOptions& options) {
  const auto candidates = cci_explore(models, kappa, horizon, options.max_path_len);
  return rank_candidates_by_cost(candidates, grid, limits, models.universe, d, options);
}

}  // namespace gridcausal
