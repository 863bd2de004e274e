#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gridcausal {

enum class BusKind { slack, pv, pq };

struct Bus {
  int id = 0;
  BusKind kind = BusKind::pq;
  double p_demand = 0.0;  // MW
  double q_demand = 0.0;  // MVAr
  double g_shunt = 0.0;   // MW consumed at V = 1 pu
  double b_shunt = 0.0;   // MVAr injected at V = 1 pu
  double v_mag = 1.0;     // pu
  double v_ang = 0.0;     // rad

  bool operator==(const Bus&) const = default;
};

struct Branch {
  int index = 0;  // position over in-service branches, file order
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;          // pu
  double x = 0.0;          // pu
  double b_charging = 0.0; // pu total line charging
  double rate_a = 0.0;     // MW, 0 = unspecified
  double tap = 0.0;        // off-nominal turns ratio, 0 = none
  double shift = 0.0;      // rad
  int status = 1;

  bool operator==(const Branch&) const = default;
};

struct Generator {
  int bus = 0;
  double p_out = 0.0;  // MW
  double q_out = 0.0;  // MVAr
  double q_min = 0.0;
  double q_max = 0.0;
  double v_setpoint = 1.0;  // pu

  bool operator==(const Generator&) const = default;
};

/// Immutable in-memory network model. Branches hold only in-service
/// lines, indexed 0..n_lines()-1 in file order; out-of-service rows are
/// dropped at parse time.
struct GridCase {
  std::string name;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> gens;

  int n_lines() const { return static_cast<int>(branches.size()); }

  /// Position of a bus id in `buses`, or -1.
  int bus_pos(int bus_id) const {
    for (int i = 0; i < static_cast<int>(buses.size()); ++i)
      if (buses[i].id == bus_id) return i;
    return -1;
  }

  int slack_pos() const {
    for (int i = 0; i < static_cast<int>(buses.size()); ++i)
      if (buses[i].kind == BusKind::slack) return i;
    return -1;
  }

  bool operator==(const GridCase&) const = default;
};

/// Per-line active-flow limits in MW.
struct LineLimits {
  std::vector<double> p_max;
};

struct MalformedCase : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DanglingReference : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoSlackBus : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonConvergedBase : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses a MATPOWER-format case (the mpc.baseMVA / mpc.bus / mpc.gen /
/// mpc.branch matrices) or the JSON mirror of GridCase. Throws
/// MalformedCase, DanglingReference or NoSlackBus.
GridCase parse_case(const std::string& text, const std::string& name = "case");

GridCase parse_case_file(const std::string& path);

/// JSON mirror of the model; parse_case round-trips it exactly.
std::string to_json(const GridCase& grid);

struct FlowState;  // power_flow.hpp

/// Limit rule: rate_a when the file specifies one, else alpha-scaled
/// base-case flow, floored so unloaded lines keep a usable limit.
LineLimits assign_limits(const GridCase& grid, const FlowState& base,
                         double alpha, double floor_mw = 1.0);

/// Copy of the case with every bus demand scaled by `factor`
/// (constant power factor).
GridCase with_load_scale(const GridCase& grid, double factor);

/// Per-bus variant; `factor_per_bus` is indexed by bus position.
GridCase with_load_scale(const GridCase& grid, const std::vector<double>& factor_per_bus);

double total_load_mw(const GridCase& grid);

}  // namespace gridcausal
