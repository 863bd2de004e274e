#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <vector>

#include "gridcausal/cascade_sim.hpp"
#include "gridcausal/causal_learn.hpp"

namespace gridcausal {

struct UnknownInitiator : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Interaction matrix after the do-style update for an in-progress
/// cascade: rows of previously failed lines are zeroed, the rest come
/// from the model of the most recent failure.
struct InterventionState {
  std::vector<int> failed;  // branch indices, oldest first
  Eigen::MatrixXd b;        // universe space
  LineUniverse universe;
};

InterventionState intervene(const CausalModelSet& models, const std::vector<int>& failed);

/// Normalized total effect per healthy line: absolute sum of edge
/// coefficient products over simple directed paths from the latest
/// failure, length capped at max_path_len.
struct TotalEffects {
  std::vector<double> d;  // by universe position; failed lines 0
  bool all_zero = true;
};

TotalEffects total_causal_effects(const InterventionState& state, int max_path_len = 3);

struct PredictionSet {
  std::vector<std::pair<int, double>> ranked;  // (branch index, score), descending
  double kappa = 0.0;
  std::vector<int> selected;  // top ceil(N * kappa%) nonzero-score lines
  bool all_zero = false;
};

/// Next-failure prediction: intervention update, path effects, then the
/// top kappa% candidates (ties broken by ascending line index).
PredictionSet c_path(const CausalModelSet& models, const std::vector<int>& failed, double kappa,
                     int max_path_len = 3);

using NextFailurePredictor =
    std::function<PredictionSet(const std::vector<int>& failed, double kappa)>;

/// Recursive kappa%-bounded expansion from every initiating line to the
/// horizon; shared by the causal and influence-graph searches. Returns
/// all full-depth or early-terminated ordered sequences.
std::vector<std::vector<int>> explore_sequences(const LineUniverse& universe,
                                                const NextFailurePredictor& predict, double kappa,
                                                int horizon);

std::vector<std::vector<int>> cci_explore(const CausalModelSet& models, double kappa, int horizon,
                                          int max_path_len = 3);

struct CciOptions {
  int max_path_len = 3;
  bool use_dc_replay = false;
  AcOptions ac;
  int threads = 0;
};

struct RankedSequences {
  std::vector<CascadeSequence> top;  // cost descending
  int candidate_count = 0;
  bool short_of_d = false;
};

/// Replays every explored candidate through power flow, ranks by cost
/// and returns the top d.
RankedSequences cci(const CausalModelSet& models, const GridCase& grid, const LineLimits& limits,
                    double kappa, int horizon, int d, const CciOptions& options = {});

/// Cost-ranks externally supplied candidates (used by the baseline).
RankedSequences rank_candidates_by_cost(const std::vector<std::vector<int>>& candidates,
                                        const GridCase& grid, const LineLimits& limits,
                                        const LineUniverse& universe, int d,
                                        const CciOptions& options = {});

int kappa_cap(int universe_size, double kappa);

}  // namespace gridcausal
