#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "gridcausal/dataset_gen.hpp"
#include "gridcausal/rng.hpp"

using namespace gridcausal;

namespace {

std::string data_path(const std::string& file) { return std::string(GC_DATA_DIR) + "/" + file; }

struct Fixture {
  GridCase grid;
  FlowState base;
  LineLimits limits;
  LineUniverse universe;

  Fixture() {
    grid = parse_case_file(data_path("case14.m"));
    base = solve_ac(grid);
    REQUIRE(base.converged);
    limits = assign_limits(grid, base, 1.3);
    universe = LineUniverse::non_islanding(grid);
  }
};

}  // namespace

TEST_CASE("degenerate range produces a constant all-ones profile") {
  Fixture fx;
  const LoadProfile profile = make_load_profile(fx.grid, 20, 1.0, 1.0, 5, 9);
  for (const auto& step : profile.steps)
    for (double v : step) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("identity kernel leaves the raw uniform draws unchanged") {
  Fixture fx;
  const LoadProfile profile = make_load_profile(fx.grid, 50, 0.9, 1.1, 1, 4);
  // regenerate the expected raw stream with the same derivation
  Rng rng(Rng::mix(4, 0x10adULL));
  for (std::size_t j = 0; j < profile.load_buses.size(); ++j)
    for (int t = 0; t < 50; ++t)
      CHECK(profile.steps[t][j] == doctest::Approx(rng.uniform(0.9, 1.1)));
}

TEST_CASE("profiles are seed-deterministic and range-clamped") {
  Fixture fx;
  const LoadProfile a = make_load_profile(fx.grid, 100, 0.9, 1.1, 5, 11);
  const LoadProfile b = make_load_profile(fx.grid, 100, 0.9, 1.1, 5, 11);
  CHECK(a.steps == b.steps);
  CHECK(a.load_buses == b.load_buses);
  for (const auto& step : a.steps)
    for (double v : step) {
      CHECK(v >= 0.9);
      CHECK(v <= 1.1);
    }
  const LoadProfile c = make_load_profile(fx.grid, 100, 0.9, 1.1, 5, 12);
  CHECK(a.steps != c.steps);
}

TEST_CASE("smoothing reduces step-to-step variation") {
  Fixture fx;
  const LoadProfile raw = make_load_profile(fx.grid, 400, 0.9, 1.1, 1, 5);
  const LoadProfile smooth = make_load_profile(fx.grid, 400, 0.9, 1.1, 5, 5);
  auto mean_abs_step = [](const LoadProfile& p) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t t = 1; t < p.steps.size(); ++t)
      for (std::size_t j = 0; j < p.steps[t].size(); ++j) {
        sum += std::abs(p.steps[t][j] - p.steps[t - 1][j]);
        ++count;
      }
    return sum / count;
  };
  CHECK(mean_abs_step(smooth) < 0.5 * mean_abs_step(raw));
}

TEST_CASE("load profile only perturbs buses that carry demand") {
  Fixture fx;
  const LoadProfile profile = make_load_profile(fx.grid, 10, 0.9, 1.1, 5, 1);
  CHECK(profile.load_buses.size() == 11);  // buses 1, 7, 8 carry none
  for (int bus_pos : profile.load_buses) {
    const Bus& b = fx.grid.buses[bus_pos];
    CHECK((b.p_demand != 0.0 || b.q_demand != 0.0));
  }
}

TEST_CASE("a constant profile yields identical dataset rows") {
  Fixture fx;
  const LoadProfile profile = make_load_profile(fx.grid, 200, 1.0, 1.0, 1, 3);
  const ObservationalDataset data =
      generate_observational(fx.grid, fx.limits, fx.universe.lines[2], profile, fx.universe);
  REQUIRE(data.rows.size() >= 2);
  for (const auto& row : data.rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      CHECK(row[c] == doctest::Approx(data.rows[0][c]).epsilon(1e-12));
  }
}

TEST_CASE("dataset shape is steps x universe and the failed column is nonpositive") {
  Fixture fx;
  const LoadProfile profile = make_load_profile(fx.grid, 200, 0.9, 1.1, 5, 17);
  const int k = fx.universe.lines[3];
  const ObservationalDataset data =
      generate_observational(fx.grid, fx.limits, k, profile, fx.universe);
  CHECK(data.n_cols == 19);
  CHECK(static_cast<int>(data.rows.size()) + data.dropped_steps == 200);
  const int k_pos = fx.universe.position(k);
  for (const auto& row : data.rows) {
    REQUIRE(static_cast<int>(row.size()) == 19);
    CHECK(row[k_pos] <= 0.0);  // the removed line loses its flow
  }
}

TEST_CASE("scaling all limits by c scales every dataset entry by 1/c") {
  Fixture fx;
  const LoadProfile profile = make_load_profile(fx.grid, 200, 0.95, 1.05, 3, 23);
  const int k = fx.universe.lines[0];
  const std::vector<FlowState> base_flows = profile_base_flows(fx.grid, profile);
  const ObservationalDataset one =
      generate_observational(fx.grid, fx.limits, k, profile, fx.universe, &base_flows);
  LineLimits scaled = fx.limits;
  for (double& v : scaled.p_max) v *= 2.5;
  const ObservationalDataset two =
      generate_observational(fx.grid, scaled, k, profile, fx.universe, &base_flows);
  REQUIRE(one.rows.size() == two.rows.size());
  for (std::size_t r = 0; r < one.rows.size(); ++r)
    for (std::size_t c = 0; c < one.rows[r].size(); ++c)
      CHECK(two.rows[r][c] == doctest::Approx(one.rows[r][c] / 2.5).epsilon(1e-12));
}

TEST_CASE("datasets for distinct loaded lines differ") {
  Fixture fx;
  const LoadProfile profile = make_load_profile(fx.grid, 200, 0.95, 1.05, 3, 29);
  const std::vector<FlowState> base_flows = profile_base_flows(fx.grid, profile);
  // line 0 (1-2) carries the largest base flow; line 6 (4-5) is distinct
  const ObservationalDataset a =
      generate_observational(fx.grid, fx.limits, 0, profile, fx.universe, &base_flows);
  const ObservationalDataset b =
      generate_observational(fx.grid, fx.limits, 6, profile, fx.universe, &base_flows);
  CHECK(a.rows != b.rows);
}

TEST_CASE("too few valid rows is an error") {
  Fixture fx;
  const LoadProfile profile = make_load_profile(fx.grid, 30, 0.9, 1.1, 5, 31);
  // 30 steps < 10 * 19 required rows
  CHECK_THROWS_AS(
      generate_observational(fx.grid, fx.limits, fx.universe.lines[0], profile, fx.universe),
      TooFewValidRows);
}
