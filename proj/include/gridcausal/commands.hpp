#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "gridcausal/baseline_ig.hpp"
#include "gridcausal/cascade_predict.hpp"
#include "gridcausal/cascade_sim.hpp"
#include "gridcausal/persist.hpp"
#include "gridcausal/run_config.hpp"

namespace gridcausal {

/// A required input artifact is absent; the message names the command
/// that produces it.
struct MissingArtifact : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parsed case, its base-case AC solution, the derived line limits and
/// the non-islanding working universe.
struct PipelineContext {
  GridCase grid;
  FlowState base;
  LineLimits limits;
  LineUniverse universe;
};

PipelineContext load_context(const RunConfig& config);

struct KappaEvaluation {
  double kappa = 0.0;
  double precision_causal = 0.0;
  double precision_ig = 0.0;
  double precision_random = 0.0;
  double regret_causal = 0.0;
  double regret_ig = 0.0;
  int candidates_causal = 0;
  int candidates_ig = 0;
  long long candidate_bound = 0;
  std::vector<int> top_causal_lines;  // costliest predicted sequence
  std::vector<int> top_ig_lines;
  double top_causal_cost = 0.0;
  double top_ig_cost = 0.0;
};

struct EvaluationReport {
  std::vector<KappaEvaluation> per_kappa;
  int truth_sequences = 0;
  int truth_scored = 0;  // sequences with at least one predictable stage
  double truth_top_cost_sum = 0.0;
};

/// Expected precision of picking ceil(N * kappa%) lines uniformly from
/// the healthy universe at each stage of one truth sequence.
double analytic_random_precision(const CascadeSequence& truth, const LineUniverse& universe,
                                 double kappa);

EvaluationReport evaluate_models(const PipelineContext& ctx, const CausalModelSet& models,
                                 const InfluenceGraph& ig, const GroundTruthSet& truth,
                                 const RunConfig& config);

// Subcommand entry points; throw on validation/compute failure.
void cmd_gen_data(const RunConfig& config);
void cmd_learn(const RunConfig& config);
void cmd_ground_truth(const RunConfig& config);
void cmd_predict(const RunConfig& config, const std::vector<int>& failed_1based, double kappa);
void cmd_cci(const RunConfig& config, double kappa);
void cmd_worst_case(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);

std::string ground_truth_path(const RunConfig& config, double load_scale);

}  // namespace gridcausal
