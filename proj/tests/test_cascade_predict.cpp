#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "gridcausal/cascade_predict.hpp"
#include "gridcausal/rng.hpp"

using namespace gridcausal;

namespace {

CausalModelSet tiny_models(int n, const std::vector<std::pair<int, Eigen::MatrixXd>>& entries) {
  CausalModelSet set;
  set.universe = LineUniverse::all(n);
  for (const auto& [line, b] : entries) {
    CausalModel model;
    model.initiating_line = line;
    model.b = b;
    set.models.emplace(line, std::move(model));
  }
  return set;
}

Eigen::MatrixXd random_sparse_b(int n, double density, Rng& rng) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && rng.uniform() < density) b(i, j) = rng.uniform(-1.0, 1.0);
  return b;
}

// Independent oracle: path sums by explicit enumeration of all node
// sequences, checking each consecutive pair against the edge set.
std::vector<double> oracle_effects(const Eigen::MatrixXd& b, const std::vector<int>& failed,
                                   int max_len) {
  const int n = static_cast<int>(b.rows());
  Eigen::MatrixXd g = b;
  for (std::size_t i = 0; i + 1 < failed.size(); ++i) g.row(failed[i]).setZero();

  const int source = failed.back();
  std::vector<double> sums(n, 0.0);
  std::vector<int> path{source};
  auto extend = [&](auto&& self) -> void {
    if (static_cast<int>(path.size()) > max_len) return;
    for (int next = 0; next < n; ++next) {
      if (std::find(path.begin(), path.end(), next) != path.end()) continue;
      if (g(next, path.back()) == 0.0) continue;  // edge path.back() -> next
      double product = 1.0;
      for (std::size_t e = 0; e + 1 < path.size(); ++e) product *= g(path[e + 1], path[e]);
      product *= g(next, path.back());
      sums[next] += product;
      path.push_back(next);
      self(self);
      path.pop_back();
    }
  };
  extend(extend);

  for (int line : failed) sums[line] = 0.0;
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    sums[j] = std::abs(sums[j]);
    total += sums[j];
  }
  if (total > 0.0)
    for (double& v : sums) v /= total;
  return sums;
}

}  // namespace

TEST_CASE("intervention keeps the initiating model at stage one") {
  Eigen::MatrixXd b(3, 3);
  b << 0, 0.4, 0, 0.2, 0, 0.1, 0, 0.3, 0;
  const CausalModelSet models = tiny_models(3, {{1, b}});
  const InterventionState state = intervene(models, {1});
  CHECK(state.b == b);
}

TEST_CASE("intervention zeroes the rows of earlier failures") {
  Eigen::MatrixXd b(3, 3);
  b << 0, 0.4, 0.5, 0.2, 0, 0.1, 0.7, 0.3, 0;
  const CausalModelSet models = tiny_models(3, {{2, b}});

  SUBCASE("one prior failure") {
    const InterventionState state = intervene(models, {0, 2});
    CHECK(state.b.row(0).cwiseAbs().sum() == 0.0);
    CHECK(state.b.row(1) == b.row(1));
    CHECK(state.b.row(2) == b.row(2));
  }
  SUBCASE("two prior failures: entrywise application of the update rule") {
    const InterventionState state = intervene(models, {0, 1, 2});
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double expected = (i == 0 || i == 1) ? 0.0 : b(i, j);
        CHECK(state.b(i, j) == expected);
      }
  }
}

TEST_CASE("intervention is idempotent") {
  Rng rng(3);
  Eigen::MatrixXd b = random_sparse_b(6, 0.4, rng);
  const CausalModelSet models = tiny_models(6, {{4, b}});
  const InterventionState once = intervene(models, {1, 2, 4});
  CausalModelSet again = models;
  again.models.at(4).b = once.b;
  const InterventionState twice = intervene(again, {1, 2, 4});
  CHECK(once.b == twice.b);
}

TEST_CASE("unknown initiator is rejected") {
  const CausalModelSet models = tiny_models(3, {});
  CHECK_THROWS_AS(intervene(models, {0}), UnknownInitiator);
}

TEST_CASE("a single edge takes the whole normalized effect") {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 3);
  b(2, 0) = 0.4;  // edge 0 -> 2
  const CausalModelSet models = tiny_models(3, {{0, b}});
  const TotalEffects effects = total_causal_effects(intervene(models, {0}), 3);
  CHECK_FALSE(effects.all_zero);
  CHECK(effects.d[2] == doctest::Approx(1.0));
  CHECK(effects.d[1] == 0.0);
}

TEST_CASE("worked two-path example: D(j) = 6/11, D(a) = 5/11") {
  // edges: source -> j (0.5), source -> a (0.5), a -> j (0.2)
  const int source = 0, a = 1, j = 2;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 3);
  b(j, source) = 0.5;
  b(a, source) = 0.5;
  b(j, a) = 0.2;
  const CausalModelSet models = tiny_models(3, {{source, b}});
  const TotalEffects effects = total_causal_effects(intervene(models, {source}), 3);
  CHECK(effects.d[j] == doctest::Approx(6.0 / 11.0));
  CHECK(effects.d[a] == doctest::Approx(5.0 / 11.0));
}

TEST_CASE("path effects match the brute-force enumerator on 200 random graphs") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(8));  // 3..10
    Eigen::MatrixXd b = random_sparse_b(n, 0.35, rng);
    // up to two prior failures plus the active one
    std::vector<int> failed;
    const int n_failed = 1 + static_cast<int>(rng.below(std::min(3, n - 1)));
    while (static_cast<int>(failed.size()) < n_failed) {
      const int line = static_cast<int>(rng.below(n));
      if (std::find(failed.begin(), failed.end(), line) == failed.end()) failed.push_back(line);
    }
    const CausalModelSet models = tiny_models(n, {{failed.back(), b}});
    const TotalEffects effects = total_causal_effects(intervene(models, failed), 3);
    const std::vector<double> expected = oracle_effects(b, failed, 3);

    double total = 0.0;
    for (int v = 0; v < n; ++v) {
      CHECK(effects.d[v] == doctest::Approx(expected[v]).epsilon(1e-12));
      total += effects.d[v];
    }
    if (!effects.all_zero) CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("c_path ranks by effect and caps the selection") {
  Rng rng(5);
  const int n = 19;
  Eigen::MatrixXd b = random_sparse_b(n, 0.3, rng);
  const CausalModelSet models = tiny_models(n, {{3, b}});

  SUBCASE("kappa = 100 selects every nonzero-score candidate, ranked") {
    const PredictionSet p = c_path(models, {3}, 100.0);
    int nonzero = 0;
    for (const auto& [line, score] : p.ranked)
      if (score > 0) ++nonzero;
    CHECK(static_cast<int>(p.selected.size()) == nonzero);
    for (std::size_t i = 1; i < p.ranked.size(); ++i)
      CHECK(p.ranked[i - 1].second >= p.ranked[i].second);
  }
  SUBCASE("kappa = 25 on 19 lines caps at 5") {
    const PredictionSet p = c_path(models, {3}, 25.0);
    CHECK(kappa_cap(19, 25.0) == 5);
    CHECK(p.selected.size() <= 5);
  }
  SUBCASE("ranked order equals the oracle order") {
    const PredictionSet p = c_path(models, {3}, 100.0);
    const std::vector<double> expected = oracle_effects(b, {3}, 3);
    std::vector<std::pair<int, double>> oracle_rank;
    for (int v = 0; v < n; ++v)
      if (v != 3) oracle_rank.emplace_back(v, expected[v]);
    std::stable_sort(oracle_rank.begin(), oracle_rank.end(), [](const auto& a, const auto& c) {
      if (a.second != c.second) return a.second > c.second;
      return a.first < c.first;
    });
    REQUIRE(p.ranked.size() == oracle_rank.size());
    for (std::size_t i = 0; i < oracle_rank.size(); ++i) {
      CHECK(p.ranked[i].first == oracle_rank[i].first);
      CHECK(p.ranked[i].second == doctest::Approx(oracle_rank[i].second).epsilon(1e-12));
    }
  }
  SUBCASE("selection is monotone in kappa") {
    const PredictionSet small = c_path(models, {3}, 15.0);
    const PredictionSet large = c_path(models, {3}, 45.0);
    REQUIRE(small.selected.size() <= large.selected.size());
    for (std::size_t i = 0; i < small.selected.size(); ++i)
      CHECK(small.selected[i] == large.selected[i]);
  }
  SUBCASE("failed lines never appear in a prediction") {
    const PredictionSet p = c_path(models, {1, 7, 3}, 100.0);
    for (int line : {1, 7, 3}) {
      CHECK(std::find(p.selected.begin(), p.selected.end(), line) == p.selected.end());
      for (const auto& [ranked_line, score] : p.ranked) CHECK(ranked_line != line);
    }
  }
}

TEST_CASE("an isolated initiator yields the all-zero marker and empty selection") {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(4, 4);
  b(2, 1) = 0.5;  // unrelated edge
  const CausalModelSet models = tiny_models(4, {{0, b}});
  const PredictionSet p = c_path(models, {0}, 50.0);
  CHECK(p.all_zero);
  CHECK(p.selected.empty());
}

TEST_CASE("singleton prediction sets make the explorer emit one chain per initiator") {
  // ring: each line causes exactly the next one
  const int n = 5;
  std::vector<std::pair<int, Eigen::MatrixXd>> entries;
  for (int k = 0; k < n; ++k) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    b((k + 1) % n, k) = 0.9;
    entries.emplace_back(k, b);
  }
  const CausalModelSet models = tiny_models(n, entries);
  const auto sequences = cci_explore(models, 1e-9, 3);  // cap of 1
  CHECK(sequences.size() == n);
  for (const auto& seq : sequences) CHECK(seq.size() == 3);
}

TEST_CASE("explored candidates respect the branching bound on random models") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 4 + static_cast<int>(rng.below(5));
    std::vector<std::pair<int, Eigen::MatrixXd>> entries;
    for (int k = 0; k < n; ++k) entries.emplace_back(k, random_sparse_b(n, 0.4, rng));
    const CausalModelSet models = tiny_models(n, entries);
    const double kappa = rng.uniform(10.0, 60.0);
    const int horizon = 2 + static_cast<int>(rng.below(2));
    const auto sequences = cci_explore(models, kappa, horizon);
    const double bound = n * std::pow(kappa_cap(n, kappa), horizon - 1);
    CHECK(static_cast<double>(sequences.size()) <= bound);
    std::set<std::vector<int>> unique(sequences.begin(), sequences.end());
    CHECK(unique.size() == sequences.size());
    for (const auto& seq : sequences) {
      std::set<int> lines(seq.begin(), seq.end());
      CHECK(lines.size() == seq.size());  // no repeats anywhere
    }
  }
}

TEST_CASE("uniform coefficient scaling leaves single-hop rankings unchanged") {
  Rng rng(99);
  Eigen::MatrixXd b = random_sparse_b(8, 0.4, rng);
  CausalModelSet models = tiny_models(8, {{2, b}});
  CausalModelSet scaled = models;
  scaled.models.at(2).b *= 3.5;
  const PredictionSet p = c_path(models, {2}, 100.0, 1);
  const PredictionSet q = c_path(scaled, {2}, 100.0, 1);
  REQUIRE(p.ranked.size() == q.ranked.size());
  for (std::size_t i = 0; i < p.ranked.size(); ++i) {
    CHECK(p.ranked[i].first == q.ranked[i].first);
    CHECK(p.ranked[i].second == doctest::Approx(q.ranked[i].second).epsilon(1e-12));
  }
  CHECK(p.selected == q.selected);
}

TEST_CASE("cci ranks candidates by independently replayed cost") {
  const std::string path = std::string(GC_DATA_DIR) + "/case14.m";
  const GridCase grid = parse_case_file(path);
  const FlowState base = solve_ac(grid);
  REQUIRE(base.converged);
  const LineLimits limits = assign_limits(grid, base, 1.3);
  const LineUniverse universe = LineUniverse::non_islanding(grid);

  // synthetic sparse models over the full universe
  Rng rng(202);
  CausalModelSet models;
  models.universe = universe;
  for (int line : universe.lines) {
    CausalModel model;
    model.initiating_line = line;
    model.b = Eigen::MatrixXd::Zero(universe.size(), universe.size());
    for (int i = 0; i < universe.size(); ++i)
      for (int j = 0; j < universe.size(); ++j)
        if (i != j && rng.uniform() < 0.2) model.b(i, j) = rng.uniform(-0.8, 0.8);
    models.models.emplace(line, std::move(model));
  }

  const RankedSequences ranked = cci(models, grid, limits, 20.0, 3, 10);
  REQUIRE_FALSE(ranked.top.empty());
  CHECK(ranked.candidate_count > 0);

  SUBCASE("costs descend and match an independent replay") {
    for (std::size_t i = 0; i < ranked.top.size(); ++i) {
      if (i) CHECK(ranked.top[i - 1].cost >= ranked.top[i].cost);
      const CascadeSequence again =
          replay_sequence(grid, limits, universe, ranked.top[i].lines);
      CHECK(ranked.top[i].cost == doctest::Approx(again.cost).epsilon(1e-12));
    }
  }
  SUBCASE("d = 1 returns the single costliest candidate") {
    const RankedSequences best = cci(models, grid, limits, 20.0, 3, 1);
    REQUIRE(best.top.size() == 1);
    CHECK(best.top[0].cost == doctest::Approx(ranked.top[0].cost));
    CHECK(best.top[0].lines == ranked.top[0].lines);
  }
  SUBCASE("d beyond the candidate count is flagged short") {
    const RankedSequences all = cci(models, grid, limits, 20.0, 3, 1000000);
    CHECK(all.short_of_d);
    CHECK(static_cast<int>(all.top.size()) == all.candidate_count);
  }
  SUBCASE("failed lines never reappear later in any candidate") {
    const auto sequences = cci_explore(models, 20.0, 3);
    for (const auto& seq : sequences) {
      std::set<int> seen;
      for (int line : seq) CHECK(seen.insert(line).second);
    }
  }
}
