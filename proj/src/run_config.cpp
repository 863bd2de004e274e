#include "gridcausal/run_config.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gridcausal {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<double> parse_list(const std::string& value, const std::string& key) {
  std::vector<double> out;
  std::istringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "' for " + key);
    }
  }
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

double parse_num(const std::string& value, const std::string& key) {
  try {
    return std::stod(value);
  } catch (const std::exception&) {
    throw ConfigError("bad number '" + value + "' for " + key);
  }
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("bad boolean '" + value + "' for " + key);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::istringstream lines(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (auto hash = line.find_first_of("#;"); hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section at line " + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " + std::to_string(line_no));
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "case.path") config.case_path = value;
    else if (key == "limits.alpha") config.alpha = parse_num(value, key);
    else if (key == "limits.floor_mw") config.floor_mw = parse_num(value, key);
    else if (key == "profile.steps") config.steps = static_cast<int>(parse_num(value, key));
    else if (key == "profile.lo") config.lo = parse_num(value, key);
    else if (key == "profile.hi") config.hi = parse_num(value, key);
    else if (key == "profile.kernel_window") config.kernel_window = static_cast<int>(parse_num(value, key));
    else if (key == "lingam.tau") config.tau = parse_num(value, key);
    else if (key == "lingam.seed") config.seed = static_cast<std::uint64_t>(parse_num(value, key));
    else if (key == "predict.kappas") config.kappas = parse_list(value, key);
    else if (key == "predict.max_path_len") config.max_path_len = static_cast<int>(parse_num(value, key));
    else if (key == "predict.horizon") config.horizon = static_cast<int>(parse_num(value, key));
    else if (key == "predict.top_d") config.top_d = static_cast<int>(parse_num(value, key));
    else if (key == "simulate.load_scales") config.load_scales = parse_list(value, key);
    else if (key == "simulate.ig_sequences") config.ig_sequences = static_cast<int>(parse_num(value, key));
    else if (key == "simulate.worst_case_dc") config.worst_case_dc = parse_bool(value, key);
    else if (key == "simulate.enforce_q_limits") config.enforce_q_limits = parse_bool(value, key);
    else if (key == "simulate.threads") config.threads = static_cast<int>(parse_num(value, key));
    else if (key == "output.dir") config.out_dir = value;
    else throw ConfigError("unknown config key '" + key + "'");
  }
  return config;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const RunConfig& config) {
  if (config.case_path.empty()) throw ConfigError("case.path is required");
  if (!std::filesystem::exists(config.case_path))
    throw ConfigError("case file does not exist: " + config.case_path);
  if (config.alpha <= 1.0) throw ConfigError("limits.alpha must exceed 1");
  if (config.floor_mw <= 0.0) throw ConfigError("limits.floor_mw must be positive");
  if (config.kernel_window < 1) throw ConfigError("profile.kernel_window must be >= 1");
  if (config.steps < config.kernel_window)
    throw ConfigError("profile.steps must be >= kernel_window");
  if (config.lo <= 0.0 || config.lo > config.hi)
    throw ConfigError("profile range must satisfy 0 < lo <= hi");
  if (config.kappas.empty()) throw ConfigError("predict.kappas must not be empty");
  for (double k : config.kappas)
    if (k <= 0.0 || k > 100.0) throw ConfigError("kappa values must lie in (0, 100]");
  if (config.max_path_len < 1) throw ConfigError("predict.max_path_len must be >= 1");
  if (config.horizon < 1) throw ConfigError("predict.horizon must be >= 1");
  if (config.top_d < 1) throw ConfigError("predict.top_d must be >= 1");
  for (double s : config.load_scales)
    if (s <= 0.0) throw ConfigError("load scales must be positive");
  if (config.ig_sequences < 1) throw ConfigError("simulate.ig_sequences must be >= 1");
  if (config.out_dir.empty()) throw ConfigError("output.dir is required");
}

std::string describe(const RunConfig& c) {
  std::ostringstream ss;
  ss << "case=" << c.case_path << " alpha=" << c.alpha << " floor_mw=" << c.floor_mw
     << " steps=" << c.steps << " lo=" << c.lo << " hi=" << c.hi
     << " kernel_window=" << c.kernel_window << " tau=" << c.tau << " seed=" << c.seed
     << " max_path_len=" << c.max_path_len << " horizon=" << c.horizon << " top_d=" << c.top_d
     << " ig_sequences=" << c.ig_sequences;
  return ss.str();
}

}  // namespace gridcausal
