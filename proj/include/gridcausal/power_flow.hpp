#pragma once

#include <vector>

#include "gridcausal/grid_io.hpp"

namespace gridcausal {

enum class SolveStatus { ok, islanded, nonconverged };

/// Snapshot of per-line absolute active flows (MW) after one solve.
/// Removed lines report 0. Bus voltages are kept so tests can verify
/// mismatches independently.
struct FlowState {
  std::vector<double> p_line;
  bool converged = false;
  int iterations = 0;
  SolveStatus status = SolveStatus::ok;
  double max_mismatch_pu = 0.0;
  std::vector<double> v_mag;  // pu, per bus
  std::vector<double> v_ang;  // rad, per bus
};

struct AcOptions {
  double tol_pu = 1e-8;
  int max_iter = 20;
  bool enforce_q_limits = false;  // MATPOWER default; PV->PQ switching when on
  int max_q_rounds = 6;
};

/// Newton-Raphson AC power flow in polar form from a flat start. The
/// slack bus absorbs the active imbalance; with enforce_q_limits on,
/// reactive limits are honored by PV->PQ switching. Returns status
/// islanded without solving when the surviving network is disconnected.
FlowState solve_ac(const GridCase& grid, const std::vector<int>& removed_lines = {},
                   const AcOptions& options = {});

/// Linear B-theta flow. Always converged when the network is connected.
FlowState solve_dc(const GridCase& grid, const std::vector<int>& removed_lines = {});

/// True iff removing the given lines disconnects the bus graph.
bool is_islanding(const GridCase& grid, const std::vector<int>& removed_lines);

/// Lines whose solo removal keeps the intact network connected.
std::vector<int> non_islanding_lines(const GridCase& grid);

}  // namespace gridcausal
