#include "gridcausal/persist.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gridcausal/util.hpp"
#include "json.hpp"

namespace gridcausal {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

std::uint64_t hash_file(const std::string& path) { return fnv1a64(read_text_file(path)); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 12);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
  const std::string text = read_text_file(path);
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return {};
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

namespace {

json anomaly_to_json(const AnomalyVector& a) {
  json arr = json::array();
  for (double v : a.s) arr.push_back(v);
  return arr;
}

json universe_to_json(const LineUniverse& u) {
  json arr = json::array();
  for (int line : u.lines) arr.push_back(line + 1);
  return arr;
}

LineUniverse universe_from_json(const json& arr, int n_total) {
  std::vector<int> lines;
  for (const auto& v : arr) lines.push_back(v.get<int>() - 1);
  return LineUniverse::over(std::move(lines), n_total);
}

}  // namespace

void save_ground_truth(const std::string& path, const GroundTruthSet& set) {
  std::string out;
  json header = {{"case_id", set.case_id},
                 {"horizon", set.horizon},
                 {"load_scale", set.load_scale},
                 {"count", set.sequences.size()}};
  out += header.dump();
  out += '\n';
  for (const auto& seq : set.sequences) {
    json j;
    j["lines"] = json::array();
    for (int line : seq.lines) j["lines"].push_back(line + 1);
    j["cost"] = seq.cost;
    j["terminal_reason"] = to_string(seq.terminal_reason);
    j["stage_anomalies"] = json::array();
    for (const auto& a : seq.stage_anomalies) j["stage_anomalies"].push_back(anomaly_to_json(a));
    out += j.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

GroundTruthSet load_ground_truth(const std::string& path) {
  GroundTruthSet set;
  std::istringstream lines(read_text_file(path));
  std::string line;
  bool first = true;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (first) {
      set.case_id = j.at("case_id").get<std::string>();
      set.horizon = j.at("horizon").get<int>();
      set.load_scale = j.at("load_scale").get<double>();
      first = false;
      continue;
    }
    CascadeSequence seq;
    for (const auto& v : j.at("lines")) seq.lines.push_back(v.get<int>() - 1);
    seq.cost = j.at("cost").get<double>();
    seq.terminal_reason = terminal_reason_from_string(j.at("terminal_reason").get<std::string>());
    int stage = 1;
    for (const auto& arr : j.at("stage_anomalies")) {
      AnomalyVector a;
      a.stage = stage++;
      for (const auto& v : arr) a.s.push_back(v.get<double>());
      seq.stage_anomalies.push_back(std::move(a));
    }
    set.sequences.push_back(std::move(seq));
  }
  return set;
}

void save_dataset(const std::string& csv_path, const std::string& sidecar_path,
                  const ObservationalDataset& data, const std::string& case_id,
                  const LineUniverse& universe, std::uint64_t seed,
                  const std::string& profile_desc) {
  std::string out;
  for (const auto& row : data.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_double(row[c]);
    }
    out += '\n';
  }
  write_text_file(csv_path, out);
  json sidecar = {{"case_id", case_id},
                  {"initiating_line", data.initiating_line + 1},
                  {"n_rows", data.rows.size()},
                  {"n_cols", data.n_cols},
                  {"dropped_steps", data.dropped_steps},
                  {"seed", seed},
                  {"profile", profile_desc},
                  {"universe", universe_to_json(universe)},
                  {"data_hash", to_hex(fnv1a64(out))}};
  write_text_file(sidecar_path, sidecar.dump(2) + "\n");
}

ObservationalDataset load_dataset(const std::string& csv_path, const std::string& sidecar_path) {
  const json sidecar = json::parse(read_text_file(sidecar_path));
  ObservationalDataset data;
  data.initiating_line = sidecar.at("initiating_line").get<int>() - 1;
  data.n_cols = sidecar.at("n_cols").get<int>();
  data.dropped_steps = sidecar.at("dropped_steps").get<int>();
  const Eigen::MatrixXd m = load_matrix_csv(csv_path);
  data.rows.resize(m.rows());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    data.rows[r].resize(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.rows[r][c] = m(r, c);
  }
  return data;
}

void save_model_set(const std::string& dir, const CausalModelSet& set, const std::string& case_id,
                    double tau, std::uint64_t seed,
                    const std::vector<std::pair<int, std::uint64_t>>& dataset_hashes) {
  fs::create_directories(dir);
  json manifest = {{"case_id", case_id},
                   {"tau", tau},
                   {"seed", seed},
                   {"n", set.universe.size()},
                   {"n_total", set.universe.pos.size()},
                   {"universe", universe_to_json(set.universe)}};
  manifest["models"] = json::array();
  for (const auto& [line, model] : set.models) {
    const std::string file = "b_k" + std::to_string(line + 1) + ".csv";
    save_matrix_csv(dir + "/" + file, model.b);
    manifest["models"].push_back({{"initiating_line", line + 1},
                                  {"file", file},
                                  {"hash", to_hex(hash_file(dir + "/" + file))},
                                  {"ica_iterations", model.ica.iterations},
                                  {"mean_excess_kurtosis", model.ica.mean_excess_kurtosis},
                                  {"non_gaussian_ok", model.ica.non_gaussian_ok}});
  }
  manifest["failures"] = json::array();
  for (const auto& [line, message] : set.failures)
    manifest["failures"].push_back({{"initiating_line", line + 1}, {"error", message}});
  manifest["dataset_hashes"] = json::array();
  for (const auto& [line, hash] : dataset_hashes)
    manifest["dataset_hashes"].push_back(
        {{"initiating_line", line + 1}, {"hash", to_hex(hash)}});
  write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

CausalModelSet load_model_set(const std::string& dir) {
  const json manifest = json::parse(read_text_file(dir + "/manifest.json"));
  CausalModelSet set;
  set.universe =
      universe_from_json(manifest.at("universe"), manifest.at("n_total").get<int>());
  for (const auto& entry : manifest.at("models")) {
    CausalModel model;
    model.initiating_line = entry.at("initiating_line").get<int>() - 1;
    model.tau = manifest.at("tau").get<double>();
    model.b = load_matrix_csv(dir + "/" + entry.at("file").get<std::string>());
    model.ica.iterations = entry.at("ica_iterations").get<int>();
    model.ica.mean_excess_kurtosis = entry.at("mean_excess_kurtosis").get<double>();
    model.ica.non_gaussian_ok = entry.at("non_gaussian_ok").get<bool>();
    set.models.emplace(model.initiating_line, std::move(model));
  }
  return set;
}

void save_influence_graph(const std::string& dir, const InfluenceGraph& ig,
                          const std::string& case_id, int training_sequences,
                          std::uint64_t seed) {
  fs::create_directories(dir);
  save_matrix_csv(dir + "/counts.csv", ig.counts);
  save_matrix_csv(dir + "/probs.csv", ig.probs);
  json manifest = {{"case_id", case_id},
                   {"training_sequences", training_sequences},
                   {"seed", seed},
                   {"n_total", ig.universe.pos.size()},
                   {"universe", universe_to_json(ig.universe)},
                   {"counts_hash", to_hex(hash_file(dir + "/counts.csv"))},
                   {"probs_hash", to_hex(hash_file(dir + "/probs.csv"))}};
  write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

InfluenceGraph load_influence_graph(const std::string& dir) {
  const json manifest = json::parse(read_text_file(dir + "/manifest.json"));
  InfluenceGraph ig;
  ig.universe = universe_from_json(manifest.at("universe"), manifest.at("n_total").get<int>());
  ig.counts = load_matrix_csv(dir + "/counts.csv");
  ig.probs = load_matrix_csv(dir + "/probs.csv");
  return ig;
}

}  // namespace gridcausal
