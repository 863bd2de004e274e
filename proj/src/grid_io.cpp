#include "gridcausal/grid_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gridcausal/power_flow.hpp"
#include "json.hpp"

namespace gridcausal {

namespace {

constexpr double kPi = 3.14159265358979323846;

using Matrix = std::vector<std::vector<double>>;

std::string strip_comments(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool in_comment = false;
  for (char c : text) {
    if (c == '%') in_comment = true;
    if (c == '\n') in_comment = false;
    out.push_back(in_comment ? ' ' : c);
  }
  return out;
}

// Parses the bracketed numeric matrix that follows `mpc.<name> = [`.
// Rows end at ';' or newline; entries are whitespace separated.
Matrix parse_matrix(const std::string& body, const std::string& field) {
  Matrix rows;
  std::vector<double> row;
  std::string token;
  auto flush_token = [&] {
    if (token.empty()) return;
    try {
      std::size_t used = 0;
      double v = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      row.push_back(v);
    } catch (const std::exception&) {
      throw MalformedCase("unparseable entry '" + token + "' in mpc." + field);
    }
    token.clear();
  };
  auto flush_row = [&] {
    flush_token();
    if (!row.empty()) {
      rows.push_back(row);
      row.clear();
    }
  };
  for (char c : body) {
    if (c == ';' || c == '\n') {
      flush_row();
    } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      flush_token();
    } else {
      token.push_back(c);
    }
  }
  flush_row();
  if (!rows.empty()) {
    const std::size_t width = rows.front().size();
    for (const auto& r : rows)
      if (r.size() != width)
        throw MalformedCase("ragged matrix row in mpc." + field);
  }
  return rows;
}

struct RawCase {
  bool has_base = false;
  double base_mva = 100.0;
  Matrix bus, gen, branch;
  bool has_bus = false, has_gen = false, has_branch = false;
};

RawCase scan_matpower(const std::string& text) {
  RawCase raw;
  const std::string clean = strip_comments(text);
  std::size_t pos = 0;
  while ((pos = clean.find("mpc.", pos)) != std::string::npos) {
    std::size_t name_start = pos + 4;
    std::size_t p = name_start;
    while (p < clean.size() &&
           (std::isalnum(static_cast<unsigned char>(clean[p])) || clean[p] == '_'))
      ++p;
    const std::string field = clean.substr(name_start, p - name_start);
    while (p < clean.size() && std::isspace(static_cast<unsigned char>(clean[p]))) ++p;
    if (p >= clean.size() || clean[p] != '=') {
      pos = p;
      continue;
    }
    ++p;
    while (p < clean.size() && std::isspace(static_cast<unsigned char>(clean[p]))) ++p;
    if (p < clean.size() && clean[p] == '[') {
      std::size_t close = clean.find(']', p);
      if (close == std::string::npos)
        throw MalformedCase("unterminated matrix mpc." + field);
      const std::string body = clean.substr(p + 1, close - p - 1);
      if (field == "bus") {
        raw.bus = parse_matrix(body, field);
        raw.has_bus = true;
      } else if (field == "gen") {
        raw.gen = parse_matrix(body, field);
        raw.has_gen = true;
      } else if (field == "branch") {
        raw.branch = parse_matrix(body, field);
        raw.has_branch = true;
      }
      pos = close + 1;
    } else if (field == "baseMVA") {
      std::size_t end = clean.find(';', p);
      const std::string value = clean.substr(p, end == std::string::npos ? clean.size() - p : end - p);
      try {
        raw.base_mva = std::stod(value);
        raw.has_base = true;
      } catch (const std::exception&) {
        throw MalformedCase("unparseable mpc.baseMVA");
      }
      pos = end == std::string::npos ? clean.size() : end + 1;
    } else {
      pos = p;  // string field like mpc.version; skipped
    }
  }
  return raw;
}

void check_invariants(GridCase& grid);

GridCase build_case(const RawCase& raw, const std::string& name) {
  if (!raw.has_bus) throw MalformedCase("missing mpc.bus matrix");
  if (!raw.has_branch) throw MalformedCase("missing mpc.branch matrix");
  if (!raw.has_gen) throw MalformedCase("missing mpc.gen matrix");

  GridCase grid;
  grid.name = name;
  grid.base_mva = raw.has_base ? raw.base_mva : 100.0;

  for (const auto& row : raw.bus) {
    if (row.size() < 9) throw MalformedCase("bus row with fewer than 9 columns");
    Bus b;
    b.id = static_cast<int>(row[0]);
    const int type = static_cast<int>(row[1]);
    switch (type) {
      case 1: b.kind = BusKind::pq; break;
      case 2: b.kind = BusKind::pv; break;
      case 3: b.kind = BusKind::slack; break;
      default: throw MalformedCase("unsupported bus type " + std::to_string(type));
    }
    b.p_demand = row[2];
    b.q_demand = row[3];
    b.g_shunt = row[4];
    b.b_shunt = row[5];
    b.v_mag = row[7];
    b.v_ang = row[8] * kPi / 180.0;
    grid.buses.push_back(b);
  }

  for (const auto& row : raw.gen) {
    if (row.size() < 8) throw MalformedCase("gen row with fewer than 8 columns");
    if (static_cast<int>(row[7]) == 0) continue;  // out of service
    Generator g;
    g.bus = static_cast<int>(row[0]);
    g.p_out = row[1];
    g.q_out = row[2];
    g.q_max = row[3];
    g.q_min = row[4];
    g.v_setpoint = row[5];
    grid.gens.push_back(g);
  }

  for (const auto& row : raw.branch) {
    if (row.size() < 11) throw MalformedCase("branch row with fewer than 11 columns");
    if (static_cast<int>(row[10]) == 0) continue;  // excluded from line indexing
    Branch br;
    br.from_bus = static_cast<int>(row[0]);
    br.to_bus = static_cast<int>(row[1]);
    br.r = row[2];
    br.x = row[3];
    br.b_charging = row[4];
    br.rate_a = row[5];
    br.tap = row[8];
    br.shift = row[9] * kPi / 180.0;
    grid.branches.push_back(br);
  }
  check_invariants(grid);
  return grid;
}

void check_invariants(GridCase& grid) {
  std::set<int> seen_ids;
  int slack_count = 0;
  for (const auto& b : grid.buses) {
    if (!std::isfinite(b.p_demand) || !std::isfinite(b.q_demand) || b.v_mag <= 0)
      throw MalformedCase("non-finite demand or non-positive voltage at bus " +
                          std::to_string(b.id));
    if (!seen_ids.insert(b.id).second)
      throw MalformedCase("duplicate bus id " + std::to_string(b.id));
    if (b.kind == BusKind::slack) ++slack_count;
  }
  if (slack_count != 1)
    throw NoSlackBus(slack_count == 0 ? "case has no slack bus"
                                      : "case has multiple slack buses");
  for (const auto& g : grid.gens) {
    if (grid.bus_pos(g.bus) < 0)
      throw DanglingReference("generator references unknown bus " + std::to_string(g.bus));
    if (g.q_min > g.q_max)
      throw MalformedCase("generator at bus " + std::to_string(g.bus) + " has q_min > q_max");
  }
  int index = 0;
  for (auto& br : grid.branches) {
    br.index = index++;
    br.status = 1;
    if (br.x == 0.0) throw MalformedCase("branch with zero reactance");
    if (br.from_bus == br.to_bus) throw MalformedCase("branch with identical endpoints");
    if (grid.bus_pos(br.from_bus) < 0 || grid.bus_pos(br.to_bus) < 0)
      throw DanglingReference("branch " + std::to_string(br.from_bus) + "-" +
                              std::to_string(br.to_bus) + " references unknown bus");
  }
  if (grid.branches.empty()) throw MalformedCase("case has no in-service branches");
}

GridCase from_json(const std::string& text, const std::string& name) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw MalformedCase(std::string("invalid JSON case: ") + e.what());
  }
  GridCase grid;
  try {
    grid.name = j.value("name", name);
    grid.base_mva = j.at("base_mva").get<double>();
    if (!j.contains("buses")) throw MalformedCase("missing buses");
    if (!j.contains("branches")) throw MalformedCase("missing branches");
    if (!j.contains("gens")) throw MalformedCase("missing gens");
    for (const auto& jb : j.at("buses")) {
      Bus b;
      b.id = jb.at("id").get<int>();
      const std::string kind = jb.at("kind").get<std::string>();
      if (kind == "slack") b.kind = BusKind::slack;
      else if (kind == "PV") b.kind = BusKind::pv;
      else if (kind == "PQ") b.kind = BusKind::pq;
      else throw MalformedCase("unknown bus kind '" + kind + "'");
      b.p_demand = jb.at("p_demand").get<double>();
      b.q_demand = jb.at("q_demand").get<double>();
      b.g_shunt = jb.value("g_shunt", 0.0);
      b.b_shunt = jb.value("b_shunt", 0.0);
      b.v_mag = jb.at("v_mag").get<double>();
      b.v_ang = jb.at("v_ang").get<double>();
      grid.buses.push_back(b);
    }
    for (const auto& jg : j.at("gens")) {
      Generator g;
      g.bus = jg.at("bus").get<int>();
      g.p_out = jg.at("p_out").get<double>();
      g.q_out = jg.at("q_out").get<double>();
      g.q_min = jg.at("q_min").get<double>();
      g.q_max = jg.at("q_max").get<double>();
      g.v_setpoint = jg.at("v_setpoint").get<double>();
      grid.gens.push_back(g);
    }
    for (const auto& jb : j.at("branches")) {
      if (jb.value("status", 1) == 0) continue;
      Branch br;
      br.from_bus = jb.at("from_bus").get<int>();
      br.to_bus = jb.at("to_bus").get<int>();
      br.r = jb.at("r").get<double>();
      br.x = jb.at("x").get<double>();
      br.b_charging = jb.at("b_charging").get<double>();
      br.rate_a = jb.at("rate_a").get<double>();
      br.tap = jb.value("tap", 0.0);
      br.shift = jb.value("shift", 0.0);
      grid.branches.push_back(br);
    }
  } catch (const MalformedCase&) {
    throw;
  } catch (const std::exception& e) {
    throw MalformedCase(std::string("JSON case missing field: ") + e.what());
  }
  check_invariants(grid);
  return grid;
}

}  // namespace

GridCase parse_case(const std::string& text, const std::string& name) {
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == '{') return from_json(text, name);
    break;
  }
  return build_case(scan_matpower(text), name);
}

GridCase parse_case_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedCase("cannot open case file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string stem = path;
  if (auto slash = stem.find_last_of("/\\"); slash != std::string::npos)
    stem = stem.substr(slash + 1);
  if (auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
  return parse_case(ss.str(), stem);
}

std::string to_json(const GridCase& grid) {
  nlohmann::json j;
  j["name"] = grid.name;
  j["base_mva"] = grid.base_mva;
  j["buses"] = nlohmann::json::array();
  for (const auto& b : grid.buses) {
    j["buses"].push_back({{"id", b.id},
                          {"kind", b.kind == BusKind::slack ? "slack"
                                   : b.kind == BusKind::pv  ? "PV"
                                                            : "PQ"},
                          {"p_demand", b.p_demand},
                          {"q_demand", b.q_demand},
                          {"g_shunt", b.g_shunt},
                          {"b_shunt", b.b_shunt},
                          {"v_mag", b.v_mag},
                          {"v_ang", b.v_ang}});
  }
  j["branches"] = nlohmann::json::array();
  for (const auto& br : grid.branches) {
    j["branches"].push_back({{"index", br.index},
                             {"from_bus", br.from_bus},
                             {"to_bus", br.to_bus},
                             {"r", br.r},
                             {"x", br.x},
                             {"b_charging", br.b_charging},
                             {"rate_a", br.rate_a},
                             {"tap", br.tap},
                             {"shift", br.shift},
                             {"status", br.status}});
  }
  j["gens"] = nlohmann::json::array();
  for (const auto& g : grid.gens) {
    j["gens"].push_back({{"bus", g.bus},
                         {"p_out", g.p_out},
                         {"q_out", g.q_out},
                         {"q_min", g.q_min},
                         {"q_max", g.q_max},
                         {"v_setpoint", g.v_setpoint}});
  }
  return j.dump(2);
}

LineLimits assign_limits(const GridCase& grid, const FlowState& base, double alpha,
                         double floor_mw) {
  if (!base.converged) throw NonConvergedBase("base-case flow did not converge");
  if (static_cast<int>(base.p_line.size()) != grid.n_lines())
    throw NonConvergedBase("base-case flow length does not match line count");
  LineLimits limits;
  limits.p_max.resize(grid.n_lines());
  for (int i = 0; i < grid.n_lines(); ++i) {
    const double rate = grid.branches[i].rate_a;
    limits.p_max[i] = rate > 0.0 ? rate : std::max(alpha * std::abs(base.p_line[i]), floor_mw);
  }
  return limits;
}

GridCase with_load_scale(const GridCase& grid, double factor) {
  GridCase out = grid;
  for (auto& b : out.buses) {
    b.p_demand *= factor;
    b.q_demand *= factor;
  }
  return out;
}

GridCase with_load_scale(const GridCase& grid, const std::vector<double>& factor_per_bus) {
  GridCase out = grid;
  for (std::size_t i = 0; i < out.buses.size() && i < factor_per_bus.size(); ++i) {
    out.buses[i].p_demand *= factor_per_bus[i];
    out.buses[i].q_demand *= factor_per_bus[i];
  }
  return out;
}

double total_load_mw(const GridCase& grid) {
  double total = 0.0;
  for (const auto& b : grid.buses) total += b.p_demand;
  return total;
}

}  // namespace gridcausal
