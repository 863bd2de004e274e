#pragma once

#include <Eigen/Dense>

#include "gridcausal/cascade_predict.hpp"
#include "gridcausal/cascade_sim.hpp"

namespace gridcausal {

/// One-step Markov baseline: stage-to-stage outage transition counts
/// learned from training cascades, row-normalized into probabilities.
struct InfluenceGraph {
  LineUniverse universe;
  Eigen::MatrixXd counts;
  Eigen::MatrixXd probs;
};

InfluenceGraph train_ig(const GroundTruthSet& sequences, const LineUniverse& universe);

/// Top kappa% lines from the latest failure's transition row after
/// zeroing already-failed lines and renormalizing.
PredictionSet ig_predict(const InfluenceGraph& ig, const std::vector<int>& failed, double kappa);

/// The shared kappa%-bounded explorer driven by ig_predict, followed by
/// cost-ranked selection of the top d replayed sequences.
RankedSequences ig_cci(const InfluenceGraph& ig, const GridCase& grid, const LineLimits& limits,
                       double kappa, int horizon, int d, const CciOptions& options = {});

std::vector<std::vector<int>> ig_explore(const InfluenceGraph& ig, double kappa, int horizon);

}  // namespace gridcausal
