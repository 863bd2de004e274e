#include "gridcausal/power_flow.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <unordered_map>

namespace gridcausal {

namespace {

using Complex = std::complex<double>;

struct BusIndex {
  std::unordered_map<int, int> pos;
  explicit BusIndex(const GridCase& grid) {
    pos.reserve(grid.buses.size());
    for (int i = 0; i < static_cast<int>(grid.buses.size()); ++i) pos.emplace(grid.buses[i].id, i);
  }
  int operator()(int bus_id) const { return pos.at(bus_id); }
};

std::vector<char> removal_mask(const GridCase& grid, const std::vector<int>& removed) {
  std::vector<char> mask(grid.n_lines(), 0);
  for (int r : removed)
    if (r >= 0 && r < grid.n_lines()) mask[r] = 1;
  return mask;
}

bool connected(const GridCase& grid, const std::vector<char>& removed_mask) {
  const int nb = static_cast<int>(grid.buses.size());
  BusIndex idx(grid);
  std::vector<std::vector<int>> adj(nb);
  for (int l = 0; l < grid.n_lines(); ++l) {
    if (removed_mask[l]) continue;
    const int f = idx(grid.branches[l].from_bus);
    const int t = idx(grid.branches[l].to_bus);
    adj[f].push_back(t);
    adj[t].push_back(f);
  }
  std::vector<char> seen(nb, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == nb;
}

// Per-branch admittance blocks with off-nominal tap and phase shift.
struct BranchY {
  Complex yff, yft, ytf, ytt;
};

BranchY branch_admittance(const Branch& br) {
  const Complex ys = 1.0 / Complex(br.r, br.x);
  const Complex bc(0.0, br.b_charging / 2.0);
  const double tap_mag = br.tap == 0.0 ? 1.0 : br.tap;
  const Complex tap = std::polar(tap_mag, br.shift);
  BranchY y;
  y.yff = (ys + bc) / (tap_mag * tap_mag);
  y.yft = -ys / std::conj(tap);
  y.ytf = -ys / tap;
  y.ytt = ys + bc;
  return y;
}

struct AcModel {
  int nb = 0;
  Eigen::MatrixXcd ybus;
  Eigen::VectorXd p_spec;       // pu net injection at each bus
  Eigen::VectorXd q_spec;       // pu, PQ buses only meaningful
  std::vector<BusKind> kind;    // effective kind after PV->PQ switching
  std::vector<double> v_set;    // flat-start magnitude
  std::vector<int> gen_at_bus;  // first in-service gen position or -1
};

AcModel build_model(const GridCase& grid, const std::vector<char>& removed_mask) {
  AcModel m;
  m.nb = static_cast<int>(grid.buses.size());
  BusIndex idx(grid);
  m.ybus = Eigen::MatrixXcd::Zero(m.nb, m.nb);
  for (int l = 0; l < grid.n_lines(); ++l) {
    if (removed_mask[l]) continue;
    const Branch& br = grid.branches[l];
    const BranchY y = branch_admittance(br);
    const int f = idx(br.from_bus);
    const int t = idx(br.to_bus);
    m.ybus(f, f) += y.yff;
    m.ybus(f, t) += y.yft;
    m.ybus(t, f) += y.ytf;
    m.ybus(t, t) += y.ytt;
  }
  for (int i = 0; i < m.nb; ++i)
    m.ybus(i, i) += Complex(grid.buses[i].g_shunt, grid.buses[i].b_shunt) / grid.base_mva;

  m.p_spec = Eigen::VectorXd::Zero(m.nb);
  m.q_spec = Eigen::VectorXd::Zero(m.nb);
  m.kind.resize(m.nb);
  m.v_set.assign(m.nb, 1.0);
  m.gen_at_bus.assign(m.nb, -1);
  for (int i = 0; i < m.nb; ++i) {
    m.kind[i] = grid.buses[i].kind;
    m.p_spec(i) -= grid.buses[i].p_demand / grid.base_mva;
    m.q_spec(i) -= grid.buses[i].q_demand / grid.base_mva;
  }
  for (int g = 0; g < static_cast<int>(grid.gens.size()); ++g) {
    const int i = idx(grid.gens[g].bus);
    m.p_spec(i) += grid.gens[g].p_out / grid.base_mva;
    m.v_set[i] = grid.gens[g].v_setpoint;
    if (m.gen_at_bus[i] < 0) m.gen_at_bus[i] = g;
  }
  return m;
}

struct NrResult {
  bool converged = false;
  int iterations = 0;
  double max_mismatch = 0.0;
  Eigen::VectorXd vm, va;
  Eigen::VectorXd p_calc, q_calc;
};

void calc_injections(const AcModel& m, const Eigen::VectorXd& vm, const Eigen::VectorXd& va,
                     Eigen::VectorXd& p, Eigen::VectorXd& q) {
  const int nb = m.nb;
  p.setZero(nb);
  q.setZero(nb);
  for (int i = 0; i < nb; ++i) {
    double pi = 0.0, qi = 0.0;
    for (int j = 0; j < nb; ++j) {
      const Complex y = m.ybus(i, j);
      if (y == Complex(0.0, 0.0)) continue;
      const double g = y.real(), b = y.imag();
      const double th = va(i) - va(j);
      const double c = std::cos(th), s = std::sin(th);
      pi += vm(i) * vm(j) * (g * c + b * s);
      qi += vm(i) * vm(j) * (g * s - b * c);
    }
    p(i) = pi;
    q(i) = qi;
  }
}

NrResult newton_raphson(const AcModel& m, int slack, double tol, int max_iter,
                        const Eigen::VectorXd* vm0 = nullptr,
                        const Eigen::VectorXd* va0 = nullptr) {
  const int nb = m.nb;
  NrResult res;
  res.vm.resize(nb);
  res.va.setZero(nb);
  for (int i = 0; i < nb; ++i) res.vm(i) = m.kind[i] == BusKind::pq ? 1.0 : m.v_set[i];
  if (vm0 && va0) {
    res.va = *va0;
    for (int i = 0; i < nb; ++i)
      if (m.kind[i] == BusKind::pq) res.vm(i) = (*vm0)(i);
  }

  std::vector<int> ang_vars, mag_vars;  // bus -> variable layout
  for (int i = 0; i < nb; ++i)
    if (i != slack) ang_vars.push_back(i);
  for (int i = 0; i < nb; ++i)
    if (m.kind[i] == BusKind::pq) mag_vars.push_back(i);
  const int na = static_cast<int>(ang_vars.size());
  const int nm = static_cast<int>(mag_vars.size());
  const int nv = na + nm;

  Eigen::VectorXd p_calc, q_calc, f(nv);
  Eigen::MatrixXd jac(nv, nv);

  for (int iter = 0; iter <= max_iter; ++iter) {
    calc_injections(m, res.vm, res.va, p_calc, q_calc);
    double worst = 0.0;
    for (int a = 0; a < na; ++a) {
      f(a) = m.p_spec(ang_vars[a]) - p_calc(ang_vars[a]);
      worst = std::max(worst, std::abs(f(a)));
    }
    for (int b = 0; b < nm; ++b) {
      f(na + b) = m.q_spec(mag_vars[b]) - q_calc(mag_vars[b]);
      worst = std::max(worst, std::abs(f(na + b)));
    }
    res.max_mismatch = worst;
    res.iterations = iter;
    if (worst <= tol) {
      res.converged = true;
      break;
    }
    if (iter == max_iter) break;

    // Polar Jacobian of the calculated injections.
    jac.setZero();
    auto dp_dth = [&](int i, int j) {
      if (i == j) return -q_calc(i) - m.ybus(i, i).imag() * res.vm(i) * res.vm(i);
      const Complex y = m.ybus(i, j);
      const double th = res.va(i) - res.va(j);
      return res.vm(i) * res.vm(j) * (y.real() * std::sin(th) - y.imag() * std::cos(th));
    };
    auto dp_dv = [&](int i, int j) {
      if (i == j) return p_calc(i) / res.vm(i) + m.ybus(i, i).real() * res.vm(i);
      const Complex y = m.ybus(i, j);
      const double th = res.va(i) - res.va(j);
      return res.vm(i) * (y.real() * std::cos(th) + y.imag() * std::sin(th));
    };
    auto dq_dth = [&](int i, int j) {
      if (i == j) return p_calc(i) - m.ybus(i, i).real() * res.vm(i) * res.vm(i);
      const Complex y = m.ybus(i, j);
      const double th = res.va(i) - res.va(j);
      return -res.vm(i) * res.vm(j) * (y.real() * std::cos(th) + y.imag() * std::sin(th));
    };
    auto dq_dv = [&](int i, int j) {
      if (i == j) return q_calc(i) / res.vm(i) - m.ybus(i, i).imag() * res.vm(i);
      const Complex y = m.ybus(i, j);
      const double th = res.va(i) - res.va(j);
      return res.vm(i) * (y.real() * std::sin(th) - y.imag() * std::cos(th));
    };
    for (int a = 0; a < na; ++a) {
      for (int a2 = 0; a2 < na; ++a2) jac(a, a2) = dp_dth(ang_vars[a], ang_vars[a2]);
      for (int b = 0; b < nm; ++b) jac(a, na + b) = dp_dv(ang_vars[a], mag_vars[b]);
    }
    for (int b = 0; b < nm; ++b) {
      for (int a2 = 0; a2 < na; ++a2) jac(na + b, a2) = dq_dth(mag_vars[b], ang_vars[a2]);
      for (int b2 = 0; b2 < nm; ++b2) jac(na + b, na + b2) = dq_dv(mag_vars[b], mag_vars[b2]);
    }

    Eigen::VectorXd dx = jac.partialPivLu().solve(f);
    if (!dx.allFinite()) break;
    for (int a = 0; a < na; ++a) res.va(ang_vars[a]) += dx(a);
    for (int b = 0; b < nm; ++b) res.vm(mag_vars[b]) += dx(na + b);
  }
  calc_injections(m, res.vm, res.va, p_calc, q_calc);
  res.p_calc = p_calc;
  res.q_calc = q_calc;
  return res;
}

void fill_line_flows(const GridCase& grid, const std::vector<char>& removed_mask,
                     const Eigen::VectorXd& vm, const Eigen::VectorXd& va, FlowState& out) {
  BusIndex idx(grid);
  out.p_line.assign(grid.n_lines(), 0.0);
  for (int l = 0; l < grid.n_lines(); ++l) {
    if (removed_mask[l]) continue;
    const Branch& br = grid.branches[l];
    const BranchY y = branch_admittance(br);
    const int f = idx(br.from_bus);
    const int t = idx(br.to_bus);
    const Complex vf = std::polar(vm(f), va(f));
    const Complex vt = std::polar(vm(t), va(t));
    const Complex sf = vf * std::conj(y.yff * vf + y.yft * vt);
    out.p_line[l] = std::abs(sf.real()) * grid.base_mva;
  }
}

}  // namespace

FlowState solve_ac(const GridCase& grid, const std::vector<int>& removed_lines,
                   const AcOptions& options) {
  FlowState out;
  const auto mask = removal_mask(grid, removed_lines);
  if (!connected(grid, mask)) {
    out.status = SolveStatus::islanded;
    return out;
  }
  AcModel model = build_model(grid, mask);
  const int slack = grid.slack_pos();

  NrResult nr;
  int total_iterations = 0;
  bool warm = false;
  Eigen::VectorXd vm_prev, va_prev;
  for (int round = 0; round <= options.max_q_rounds; ++round) {
    nr = newton_raphson(model, slack, options.tol_pu, options.max_iter,
                        warm ? &vm_prev : nullptr, warm ? &va_prev : nullptr);
    total_iterations += nr.iterations;
    if (!nr.converged || !options.enforce_q_limits) break;

    // PV buses whose generator hits a reactive limit become PQ buses
    // pinned at that limit; the next round restarts from this solution.
    bool switched = false;
    for (int i = 0; i < model.nb; ++i) {
      if (model.kind[i] != BusKind::pv || model.gen_at_bus[i] < 0) continue;
      const Generator& g = grid.gens[model.gen_at_bus[i]];
      const double qg = nr.q_calc(i) * grid.base_mva + grid.buses[i].q_demand;
      const double limit = qg > g.q_max ? g.q_max : qg < g.q_min ? g.q_min : qg;
      if (limit != qg) {
        model.kind[i] = BusKind::pq;
        model.q_spec(i) = (limit - grid.buses[i].q_demand) / grid.base_mva;
        switched = true;
      }
    }
    if (!switched) break;
    vm_prev = nr.vm;
    va_prev = nr.va;
    warm = true;
  }

  out.converged = nr.converged;
  out.iterations = total_iterations;
  out.max_mismatch_pu = nr.max_mismatch;
  out.status = nr.converged ? SolveStatus::ok : SolveStatus::nonconverged;
  out.v_mag.assign(nr.vm.data(), nr.vm.data() + model.nb);
  out.v_ang.assign(nr.va.data(), nr.va.data() + model.nb);
  if (nr.converged) fill_line_flows(grid, mask, nr.vm, nr.va, out);
  else out.p_line.assign(grid.n_lines(), 0.0);
  return out;
}

FlowState solve_dc(const GridCase& grid, const std::vector<int>& removed_lines) {
  FlowState out;
  const auto mask = removal_mask(grid, removed_lines);
  if (!connected(grid, mask)) {
    out.status = SolveStatus::islanded;
    return out;
  }
  const int nb = static_cast<int>(grid.buses.size());
  BusIndex idx(grid);
  const int slack = grid.slack_pos();

  Eigen::MatrixXd bmat = Eigen::MatrixXd::Zero(nb, nb);
  for (int l = 0; l < grid.n_lines(); ++l) {
    if (mask[l]) continue;
    const Branch& br = grid.branches[l];
    const double tap = br.tap == 0.0 ? 1.0 : br.tap;
    const double b = 1.0 / (br.x * tap);
    const int f = idx(br.from_bus);
    const int t = idx(br.to_bus);
    bmat(f, f) += b;
    bmat(t, t) += b;
    bmat(f, t) -= b;
    bmat(t, f) -= b;
  }

  Eigen::VectorXd p_inj = Eigen::VectorXd::Zero(nb);
  for (int i = 0; i < nb; ++i) p_inj(i) -= grid.buses[i].p_demand / grid.base_mva;
  for (const auto& g : grid.gens) p_inj(idx(g.bus)) += g.p_out / grid.base_mva;

  const int nr = nb - 1;
  Eigen::MatrixXd bred(nr, nr);
  Eigen::VectorXd pred(nr);
  std::vector<int> map;
  map.reserve(nr);
  for (int i = 0; i < nb; ++i)
    if (i != slack) map.push_back(i);
  for (int i = 0; i < nr; ++i) {
    pred(i) = p_inj(map[i]);
    for (int j = 0; j < nr; ++j) bred(i, j) = bmat(map[i], map[j]);
  }
  Eigen::VectorXd theta_red = bred.ldlt().solve(pred);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(nb);
  for (int i = 0; i < nr; ++i) theta(map[i]) = theta_red(i);

  out.p_line.assign(grid.n_lines(), 0.0);
  for (int l = 0; l < grid.n_lines(); ++l) {
    if (mask[l]) continue;
    const Branch& br = grid.branches[l];
    const double tap = br.tap == 0.0 ? 1.0 : br.tap;
    const int f = idx(br.from_bus);
    const int t = idx(br.to_bus);
    out.p_line[l] = std::abs((theta(f) - theta(t)) / (br.x * tap)) * grid.base_mva;
  }
  out.converged = true;
  out.iterations = 1;
  out.status = SolveStatus::ok;

  Eigen::VectorXd residual = bred * theta_red - pred;
  out.max_mismatch_pu = residual.cwiseAbs().maxCoeff();
  out.v_mag.assign(nb, 1.0);
  out.v_ang.assign(theta.data(), theta.data() + nb);
  return out;
}

bool is_islanding(const GridCase& grid, const std::vector<int>& removed_lines) {
  return !connected(grid, removal_mask(grid, removed_lines));
}

std::vector<int> non_islanding_lines(const GridCase& grid) {
  std::vector<int> lines;
  for (int l = 0; l < grid.n_lines(); ++l)
    if (!is_islanding(grid, {l})) lines.push_back(l);
  return lines;
}

}  // namespace gridcausal
