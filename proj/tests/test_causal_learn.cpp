#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gridcausal/causal_learn.hpp"
#include "gridcausal/rng.hpp"

using namespace gridcausal;

namespace {

// Synthetic cyclic linear SCM generator: the ground-truth oracle for
// the learner. x = (I - B)^{-1} e with Laplace noise.
struct SyntheticScm {
  Eigen::MatrixXd b;
  Eigen::MatrixXd data;
};

Eigen::MatrixXd random_cyclic_b(int n, double density, double spectral_radius, Rng& rng) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (rng.uniform() < density) {
        const double mag = rng.uniform(0.4, 0.9);
        b(i, j) = rng.uniform() < 0.5 ? mag : -mag;
      }
    }
  const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(b).eigenvalues();
  double rho = 0.0;
  for (int i = 0; i < n; ++i) rho = std::max(rho, std::abs(eigs(i)));
  if (rho > spectral_radius) b *= spectral_radius / rho;
  return b;
}

SyntheticScm make_scm(int n, double density, double spectral_radius, int rows,
                      std::uint64_t seed) {
  Rng rng(seed);
  SyntheticScm scm;
  scm.b = random_cyclic_b(n, density, spectral_radius, rng);
  const Eigen::MatrixXd mixing =
      (Eigen::MatrixXd::Identity(n, n) - scm.b).inverse();
  scm.data.resize(rows, n);
  Eigen::VectorXd noise_scale(n);
  for (int i = 0; i < n; ++i) noise_scale(i) = rng.uniform(0.5, 1.5);
  Eigen::VectorXd e(n);
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < n; ++i) e(i) = rng.laplace(noise_scale(i));
    scm.data.row(r) = (mixing * e).transpose();
  }
  return scm;
}

ObservationalDataset to_dataset(const Eigen::MatrixXd& data, int line = 0) {
  ObservationalDataset out;
  out.initiating_line = line;
  out.n_cols = static_cast<int>(data.cols());
  out.rows.resize(data.rows());
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    out.rows[r].resize(data.cols());
    for (Eigen::Index c = 0; c < data.cols(); ++c) out.rows[r][c] = data(r, c);
  }
  return out;
}

struct Recovery {
  double f1 = 0.0;
  double mae = 0.0;
};

Recovery score_recovery(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& learned,
                        double edge_eps = 0.05) {
  int tp = 0, fp = 0, fn = 0;
  double abs_err = 0.0;
  const int n = static_cast<int>(truth.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool t = std::abs(truth(i, j)) > 1e-12;
      const bool l = std::abs(learned(i, j)) > edge_eps;
      tp += t && l;
      fp += !t && l;
      fn += t && !l;
      abs_err += std::abs(truth(i, j) - learned(i, j));
    }
  Recovery r;
  r.f1 = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
  r.mae = abs_err / (n * (n - 1));
  return r;
}

double brute_force_assignment_objective(const Eigen::MatrixXd& w) {
  const int n = static_cast<int>(w.rows());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double obj = 0.0;
    for (int i = 0; i < n; ++i) obj += 1.0 / std::max(std::abs(w(perm[i], i)), 1e-12);
    best = std::min(best, obj);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double assignment_objective(const Eigen::MatrixXd& w, const std::vector<int>& rows) {
  double obj = 0.0;
  for (int i = 0; i < static_cast<int>(rows.size()); ++i)
    obj += 1.0 / std::max(std::abs(w(rows[i], i)), 1e-12);
  return obj;
}

}  // namespace

TEST_CASE("two-variable mixing is recovered up to 0.05") {
  // x1 = e1, x2 = 0.8 x1 + e2
  Rng rng(5);
  const int rows = 20000;
  Eigen::MatrixXd data(rows, 2);
  for (int r = 0; r < rows; ++r) {
    const double e1 = rng.laplace(1.0);
    const double e2 = rng.laplace(0.7);
    data(r, 0) = e1;
    data(r, 1) = 0.8 * e1 + e2;
  }
  const CausalModel model = learn_model(to_dataset(data), 0.05, 99);
  CHECK(model.b(1, 0) == doctest::Approx(0.8).epsilon(0.0625));  // within 0.05 absolute
  CHECK(std::abs(model.b(0, 1)) < 0.05);
  CHECK(model.b(0, 0) == 0.0);
  CHECK(model.b(1, 1) == 0.0);
}

TEST_CASE("best assignment is the identity for diagonally dominant matrices") {
  Eigen::MatrixXd w(3, 3);
  w << 5, 0.1, 0.2, 0.3, 4, 0.1, 0.2, 0.3, 6;
  const std::vector<int> rows = best_assignment(w);
  CHECK(rows == std::vector<int>{0, 1, 2});
}

TEST_CASE("best assignment inverts a known row permutation") {
  Rng rng(17);
  Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 4; ++i) diag(i, i) = rng.uniform(1.0, 3.0);
  // rows shuffled by sigma: row i of the permuted matrix is row sigma(i)
  const std::vector<int> sigma = {2, 0, 3, 1};
  Eigen::MatrixXd shuffled(4, 4);
  for (int i = 0; i < 4; ++i) shuffled.row(i) = diag.row(sigma[i]);
  const std::vector<int> rows = best_assignment(shuffled);
  const Eigen::MatrixXd restored = apply_row_permutation(shuffled, rows);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(restored(i, i)) > 0.5);
}

TEST_CASE("assignment matches exhaustive search on random matrices up to 6x6") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(5));  // 2..6
    Eigen::MatrixXd w(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) w(i, j) = rng.normal();
    const double exact = brute_force_assignment_objective(w);
    const double solved = assignment_objective(w, best_assignment(w));
    CHECK(solved == doctest::Approx(exact).epsilon(1e-9));
  }
}

TEST_CASE("assignment beats 1000 random permutations on a large matrix") {
  Rng rng(31);
  const int n = 19;
  Eigen::MatrixXd w(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) w(i, j) = rng.normal();
  const double solved = assignment_objective(w, best_assignment(w));
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int t = 0; t < 1000; ++t) {
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[static_cast<int>(rng.below(i + 1))]);
    CHECK(solved <= assignment_objective(w, perm) + 1e-12);
  }
}

TEST_CASE("rescale_rows yields a unit diagonal") {
  Eigen::MatrixXd w(2, 2);
  w << 2, 4, 0, 1;
  const Eigen::MatrixXd scaled = rescale_rows(w);
  CHECK(scaled(0, 0) == doctest::Approx(1.0));
  CHECK(scaled(0, 1) == doctest::Approx(2.0));
  CHECK(scaled(1, 0) == doctest::Approx(0.0));
  CHECK(scaled(1, 1) == doctest::Approx(1.0));
  CHECK(rescale_rows(scaled) == scaled);  // already unit diagonal
}

TEST_CASE("rescale_rows rejects a zero diagonal") {
  Eigen::MatrixXd w(2, 2);
  w << 0.0, 1.0, 1.0, 1.0;
  CHECK_THROWS_AS(rescale_rows(w), ZeroDiagonal);
}

TEST_CASE("cyclic SCM support and coefficients are recovered") {
  const SyntheticScm scm = make_scm(10, 0.2, 0.6, 20000, 1234);
  const CausalModel model = learn_model(to_dataset(scm.data), 0.05, 77);
  const Recovery r = score_recovery(scm.b, model.b);
  CHECK(r.f1 >= 0.9);
  CHECK(r.mae <= 0.1);
  CHECK(model.b.diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("acyclic chain coefficients are recovered in the right places") {
  // x1 -> x2 (0.7), x2 -> x3 (0.5)
  Rng rng(41);
  const int rows = 20000;
  Eigen::MatrixXd data(rows, 3);
  for (int r = 0; r < rows; ++r) {
    const double x1 = rng.laplace(1.0);
    const double x2 = 0.7 * x1 + rng.laplace(0.8);
    const double x3 = 0.5 * x2 + rng.laplace(0.9);
    data.row(r) << x1, x2, x3;
  }
  const CausalModel model = learn_model(to_dataset(data), 0.05, 7);
  CHECK(model.b(1, 0) == doctest::Approx(0.7).epsilon(0.1));
  CHECK(model.b(2, 1) == doctest::Approx(0.5).epsilon(0.1));
  // upper triangle stays empty for a chain
  CHECK(std::abs(model.b(0, 1)) < 0.08);
  CHECK(std::abs(model.b(0, 2)) < 0.08);
  CHECK(std::abs(model.b(1, 2)) < 0.08);
}

TEST_CASE("pure-noise data learns a near-empty graph") {
  Rng rng(53);
  Eigen::MatrixXd data(8000, 5);
  for (int r = 0; r < 8000; ++r)
    for (int c = 0; c < 5; ++c) data(r, c) = rng.laplace(1.0);
  const CausalModel model = learn_model(to_dataset(data), 0.05, 3);
  CHECK(model.b.cwiseAbs().maxCoeff() < 0.08);
}

TEST_CASE("Gaussian-only noise trips the non-Gaussianity gate") {
  Rng rng(61);
  Eigen::MatrixXd data(8000, 4);
  for (int r = 0; r < 8000; ++r)
    for (int c = 0; c < 4; ++c) data(r, c) = rng.normal();
  const CausalModel model = learn_model(to_dataset(data), 0.05, 5);
  CHECK_FALSE(model.ica.non_gaussian_ok);  // warning, not an error
}

TEST_CASE("a constant column is singular data") {
  Eigen::MatrixXd data = Eigen::MatrixXd::Zero(500, 3);
  Rng rng(71);
  for (int r = 0; r < 500; ++r) {
    data(r, 0) = rng.laplace(1.0);
    data(r, 1) = rng.laplace(1.0);
    data(r, 2) = 4.2;  // constant
  }
  CHECK_THROWS_AS(sparse_ica(data, 1), SingularData);
}

TEST_CASE("learning is deterministic under a fixed seed") {
  const SyntheticScm scm = make_scm(6, 0.25, 0.5, 5000, 88);
  const CausalModel a = learn_model(to_dataset(scm.data), 0.05, 55);
  const CausalModel b = learn_model(to_dataset(scm.data), 0.05, 55);
  CHECK(a.b == b.b);
}

TEST_CASE("the learned model is invariant to sample order up to noise") {
  const SyntheticScm scm = make_scm(6, 0.25, 0.5, 8000, 99);
  Eigen::MatrixXd reversed = scm.data.colwise().reverse();
  const CausalModel a = learn_model(to_dataset(scm.data), 0.05, 13);
  const CausalModel b = learn_model(to_dataset(reversed), 0.05, 13);
  CHECK((a.b - b.b).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("residuals of the recovered SCM are pairwise decorrelated") {
  const SyntheticScm scm = make_scm(8, 0.2, 0.6, 20000, 333);
  const CausalModel model = learn_model(to_dataset(scm.data), 0.05, 21);
  Eigen::MatrixXd x = scm.data;
  x.rowwise() -= x.colwise().mean().eval();
  const Eigen::MatrixXd residuals =
      x * (Eigen::MatrixXd::Identity(8, 8) - model.b).transpose();
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j) {
      const double num = (residuals.col(i).array() * residuals.col(j).array()).mean();
      const double den = std::sqrt(residuals.col(i).array().square().mean() *
                                   residuals.col(j).array().square().mean());
      CHECK(std::abs(num / den) <= 0.15);
    }
}

TEST_CASE("learn_model_set collects per-line failures without aborting") {
  const SyntheticScm good = make_scm(4, 0.3, 0.5, 4000, 111);
  ObservationalDataset ok_data = to_dataset(good.data, 0);
  ObservationalDataset bad_data = to_dataset(good.data, 1);
  for (auto& row : bad_data.rows) row[2] = 1.0;  // constant column
  const LineUniverse universe = LineUniverse::all(4);
  const CausalModelSet set = learn_model_set({ok_data, bad_data}, universe, 0.05, 9);
  CHECK(set.models.size() == 1);
  CHECK(set.models.count(0) == 1);
  REQUIRE(set.failures.size() == 1);
  CHECK(set.failures[0].first == 1);
}
