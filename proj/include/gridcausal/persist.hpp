#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gridcausal/baseline_ig.hpp"
#include "gridcausal/cascade_sim.hpp"
#include "gridcausal/causal_learn.hpp"
#include "gridcausal/dataset_gen.hpp"

namespace gridcausal {

// Artifacts are written with lossless double formatting and no
// timestamps, so identical runs produce byte-identical files. Line
// numbers are 1-based file order on disk and in every report.

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::uint64_t hash_file(const std::string& path);
std::string format_double(double v);

void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd load_matrix_csv(const std::string& path);

// One sequence per line: {"lines":[...],"cost":...,"terminal_reason":...,
// "stage_anomalies":[[...],...]}
void save_ground_truth(const std::string& path, const GroundTruthSet& set);
GroundTruthSet load_ground_truth(const std::string& path);

void save_dataset(const std::string& csv_path, const std::string& sidecar_path,
                  const ObservationalDataset& data, const std::string& case_id,
                  const LineUniverse& universe, std::uint64_t seed,
                  const std::string& profile_desc);
ObservationalDataset load_dataset(const std::string& csv_path, const std::string& sidecar_path);

void save_model_set(const std::string& dir, const CausalModelSet& set, const std::string& case_id,
                    double tau, std::uint64_t seed,
                    const std::vector<std::pair<int, std::uint64_t>>& dataset_hashes);
CausalModelSet load_model_set(const std::string& dir);

void save_influence_graph(const std::string& dir, const InfluenceGraph& ig,
                          const std::string& case_id, int training_sequences,
                          std::uint64_t seed);
InfluenceGraph load_influence_graph(const std::string& dir);

}  // namespace gridcausal
