#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridcausal/anomaly_metrics.hpp"
#include "gridcausal/dataset_gen.hpp"

namespace gridcausal {

struct SingularData : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IcaNonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ZeroDiagonal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IcaInfo {
  int iterations = 0;
  double mean_excess_kurtosis = 0.0;
  bool non_gaussian_ok = true;     // warning gate, never an error
  bool fixed_point_settled = true; // false when accepted at the stall tolerance
  int signal_rank = 0;             // whitened dimensions the rotation ran on
};

struct IcaOptions {
  double tau = 0.05;               // per-row relative sparsification threshold
  int max_iter = 500;
  double conv_tol = 1e-10;
  double stall_tol = 1e-3;         // accept-and-flag level at the iteration cap
  double subspace_floor_rel = 1e-6; // eigenvalue cut between signal and numerics
  double kurtosis_gate = 0.1;
  int backfill_support = 4;         // structural-row fit for channel-less variables
  double backfill_gain = 1e-3;
  // Column of the known exogenous driver (the dataset's initiating
  // line): it keeps a pure noise channel, and structural fits prefer it
  // over statistically tied collinear regressors. -1 disables both.
  int root_col = -1;
  double root_tie_frac = 0.5;
  // A component row only claims a variable when concentrated on it;
  // spread-out rows are near-null annihilators, and their variables get
  // structural fits instead.
  double claim_peak_frac = 0.6;
};

/// Fixed-point ICA (tanh contrast, symmetric decorrelation) on the
/// centered, whitened signal subspace, composed with the whitening
/// transform into a full unmixing matrix; near-null directions are kept
/// as unrotated eigenvector rows. Entries below tau * max|row| are
/// zeroed.
Eigen::MatrixXd sparse_ica(const Eigen::MatrixXd& data, std::uint64_t seed,
                           const IcaOptions& options = {}, IcaInfo* info = nullptr,
                           Eigen::MatrixXd* dense_out = nullptr);

/// Row permutation minimizing sum_i 1/|W[pi(i), i]|, solved exactly as a
/// linear assignment with guarded costs. Returns row[i] = source row of
/// output row i.
std::vector<int> best_assignment(const Eigen::MatrixXd& w);

Eigen::MatrixXd apply_row_permutation(const Eigen::MatrixXd& w, const std::vector<int>& rows);

/// Divides each row by its diagonal entry; throws ZeroDiagonal below
/// the 1e-12 guard.
Eigen::MatrixXd rescale_rows(const Eigen::MatrixXd& w_permuted);

/// Interaction matrix of the linear SCM s = B s + e for one initiating
/// line, recovered by ICA + assignment + row scaling, B = I - W*.
struct CausalModel {
  Eigen::MatrixXd b;
  int initiating_line = -1;
  double tau = 0.0;
  IcaInfo ica;
};

CausalModel learn_model(const ObservationalDataset& data, double tau, std::uint64_t seed,
                        const IcaOptions& base_options = {});

struct CausalModelSet {
  LineUniverse universe;
  std::map<int, CausalModel> models;                    // branch index -> model
  std::vector<std::pair<int, std::string>> failures;    // per-line errors, set still delivered
};

/// learn_model per dataset; failures are collected without aborting the
/// remaining lines.
CausalModelSet learn_model_set(const std::vector<ObservationalDataset>& datasets,
                               const LineUniverse& universe, double tau, std::uint64_t seed,
                               const IcaOptions& base_options = {}, int threads = 0);

Eigen::MatrixXd dataset_matrix(const ObservationalDataset& data);

}  // namespace gridcausal
