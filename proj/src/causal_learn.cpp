#include "gridcausal/causal_learn.hpp"

#include <cmath>

#include "gridcausal/assignment.hpp"
#include "gridcausal/rng.hpp"
#include "gridcausal/util.hpp"

namespace gridcausal {

namespace {

// W <- (W W^T)^{-1/2} W
Eigen::MatrixXd symmetric_orthogonalize(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w * w.transpose());
  const Eigen::VectorXd d = eig.eigenvalues().cwiseMax(1e-18).cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose() * w;
}

double excess_kurtosis(const Eigen::VectorXd& x) {
  const double mean = x.mean();
  const Eigen::ArrayXd c = x.array() - mean;
  const double m2 = (c * c).mean();
  const double m4 = (c * c * c * c).mean();
  if (m2 <= 0.0) return 0.0;
  return m4 / (m2 * m2) - 3.0;
}

// Sparse structural row for a variable without its own noise channel:
// forward-stepwise regression of x_j on the other columns, support and
// gain capped. Returns e_j - beta.
Eigen::RowVectorXd backfill_row(const Eigen::MatrixXd& x, int j, int max_support,
                                double gain_tol, int root_col, double root_tie_frac) {
  const int n = static_cast<int>(x.cols());
  const Eigen::VectorXd target = x.col(j);
  const double base_var = target.squaredNorm();
  std::vector<int> support;
  Eigen::VectorXd beta;
  Eigen::VectorXd residual = target;
  double current_var = base_var;

  for (int step = 0; step < max_support && current_var > 1e-14 * base_var; ++step) {
    int best = -1;
    double best_gain = 0.0;
    double root_gain = -1.0;
    for (int c = 0; c < n; ++c) {
      if (c == j) continue;
      bool used = false;
      for (int s : support) used = used || s == c;
      if (used) continue;
      const double denom = x.col(c).squaredNorm();
      if (denom <= 0.0) continue;
      const double num = residual.dot(x.col(c));
      const double gain = num * num / denom;
      if (gain > best_gain) {
        best_gain = gain;
        best = c;
      }
      if (c == root_col) root_gain = gain;
    }
    if (best < 0 || best_gain < gain_tol * base_var) break;
    // Among near-collinear regressors the known driver wins the tie.
    if (step == 0 && root_col >= 0 && root_col != j && root_gain >= root_tie_frac * best_gain)
      best = root_col;
    support.push_back(best);

    const int s = static_cast<int>(support.size());
    Eigen::MatrixXd cols(x.rows(), s);
    for (int i = 0; i < s; ++i) cols.col(i) = x.col(support[i]);
    Eigen::MatrixXd gram = cols.transpose() * cols;
    gram.diagonal().array() += 1e-10 * gram.trace() / s;
    beta = gram.ldlt().solve(cols.transpose() * target);
    residual = target - cols * beta;
    const double new_var = residual.squaredNorm();
    if (current_var - new_var < gain_tol * base_var) {
      support.pop_back();
      if (!support.empty()) {
        Eigen::MatrixXd kept(x.rows(), static_cast<int>(support.size()));
        for (std::size_t i = 0; i < support.size(); ++i) kept.col(i) = x.col(support[i]);
        Eigen::MatrixXd g2 = kept.transpose() * kept;
        g2.diagonal().array() += 1e-10 * g2.trace() / support.size();
        beta = g2.ldlt().solve(kept.transpose() * target);
      }
      break;
    }
    current_var = new_var;
  }

  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
  row(j) = 1.0;
  for (std::size_t i = 0; i < support.size(); ++i) row(support[i]) = -beta(i);
  return row;
}

}  // namespace

Eigen::MatrixXd sparse_ica(const Eigen::MatrixXd& data, std::uint64_t seed,
                           const IcaOptions& options, IcaInfo* info,
                           Eigen::MatrixXd* dense_out) {
  const int n = static_cast<int>(data.cols());
  const int rows = static_cast<int>(data.rows());
  if (rows < 10 * n)
    throw SingularData("need at least " + std::to_string(10 * n) + " rows, got " +
                       std::to_string(rows));

  Eigen::MatrixXd x = data;
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;

  for (int j = 0; j < n; ++j)
    if (x.col(j).cwiseAbs().maxCoeff() < 1e-12)
      throw SingularData("column " + std::to_string(j) + " is constant");

  // Whitening, restricted to the signal subspace. Outage-response data
  // is near rank-deficient (one dominant response direction plus a
  // small tail), and rotating whitened numerical-noise directions never
  // settles; those directions enter the unmixing unrotated instead.
  const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(rows);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd d = eig.eigenvalues();  // ascending
  const double max_eig = d.maxCoeff();
  if (max_eig <= 0.0 || d.minCoeff() < -1e-9 * max_eig)
    throw SingularData("covariance is not positive semi-definite");
  const double floor = options.subspace_floor_rel * max_eig;
  int rank = 0;
  for (int i = 0; i < n; ++i)
    if (d(i) >= floor) ++rank;
  if (rank == 0) throw SingularData("no variance above the subspace floor");

  Eigen::MatrixXd whiten(n, n);  // top `rank` rows are the signal space
  for (int i = 0; i < n; ++i) {
    const int src = n - 1 - i;  // descending eigenvalue order
    whiten.row(i) = eig.eigenvectors().col(src).transpose() / std::sqrt(std::max(d(src), floor));
  }
  const Eigen::MatrixXd z = x * whiten.topRows(rank).transpose();  // rows x rank

  // Fixed-point iteration with symmetric decorrelation, tanh contrast.
  Rng rng(Rng::mix(seed, 0x1caULL));
  Eigen::MatrixXd w(rank, rank);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < rank; ++j) w(i, j) = rng.normal();
  w = symmetric_orthogonalize(w);

  int iterations = 0;
  double delta = 1.0;
  const double inv_rows = 1.0 / static_cast<double>(rows);
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const Eigen::MatrixXd y = z * w.transpose();  // rows x rank components
    const Eigen::MatrixXd g = y.array().tanh();
    const Eigen::VectorXd g_prime_mean = (1.0 - g.array().square()).colwise().mean();
    Eigen::MatrixXd w_new = g.transpose() * z * inv_rows - g_prime_mean.asDiagonal() * w;
    w_new = symmetric_orthogonalize(w_new);
    if (!w_new.allFinite())
      throw IcaNonConvergence("fixed-point ICA diverged at iteration " + std::to_string(iter));
    // Row-wise alignment; signs are free at this stage.
    delta = 1.0 - (w_new * w.transpose()).diagonal().cwiseAbs().minCoeff();
    w = w_new;
    iterations = iter;
    if (delta < options.conv_tol) break;
  }
  // A wander persisting at the iteration cap is returned flagged, the
  // way reference fixed-point implementations warn and return: weakly
  // non-Gaussian finite samples leave the rotation dithering at its
  // sampling precision without a stable target.
  double kurt = 0.0;
  {
    const Eigen::MatrixXd y = z * w.transpose();
    for (int i = 0; i < rank; ++i) kurt += std::abs(excess_kurtosis(y.col(i)));
    kurt /= rank;
  }
  if (info) {
    info->iterations = iterations;
    info->mean_excess_kurtosis = kurt;
    info->non_gaussian_ok = kurt >= options.kurtosis_gate;
    info->fixed_point_settled = delta < options.stall_tol;
    info->signal_rank = rank;
  }

  Eigen::MatrixXd w_full(n, n);
  w_full.topRows(rank) = w * whiten.topRows(rank);
  if (rank < n) {
    // Variables without their own recovered noise channel get sparse
    // structural rows fitted on the data instead of raw null-space
    // directions. Ownership of the ICA rows comes from the guarded
    // assignment on the zero-padded square; the known driver keeps a
    // pure exogenous channel.
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(n, n);
    padded.topRows(rank) = w_full.topRows(rank);
    if (options.root_col >= 0) padded.col(options.root_col).setZero();
    const std::vector<int> source_row = best_assignment(padded);
    std::vector<char> claimed(n, 0);
    std::vector<char> keep_row(rank, 0);
    for (int i = 0; i < n; ++i) {
      if (source_row[i] >= rank) continue;
      const Eigen::RowVectorXd row = w_full.row(source_row[i]);
      if (std::abs(row(i)) >= options.claim_peak_frac * row.norm()) {
        claimed[i] = 1;
        keep_row[source_row[i]] = 1;
      }
    }
    int out = 0;
    for (int m = 0; m < rank; ++m)
      if (keep_row[m]) w_full.row(out++) = w_full.row(m);
    if (options.root_col >= 0 && !claimed[options.root_col]) {
      claimed[options.root_col] = 1;
      w_full.row(out) = Eigen::RowVectorXd::Zero(n);
      w_full(out, options.root_col) = 1.0;
      ++out;
    }
    // The structural equation s = B s + e carries no intercept, so the
    // fits run on the raw anomalies: the mean response is part of the
    // relationship, not an offset to remove.
    for (int j = 0; j < n; ++j)
      if (!claimed[j])
        w_full.row(out++) = backfill_row(data, j, options.backfill_support,
                                         options.backfill_gain, options.root_col,
                                         options.root_tie_frac);
  }
  if (dense_out) *dense_out = w_full;
  for (int i = 0; i < n; ++i) {
    const double row_max = w_full.row(i).cwiseAbs().maxCoeff();
    const double cut = options.tau * row_max;
    for (int j = 0; j < n; ++j)
      if (std::abs(w_full(i, j)) < cut) w_full(i, j) = 0.0;
  }
  return w_full;
}

std::vector<int> best_assignment(const Eigen::MatrixXd& w) {
  const int n = static_cast<int>(w.rows());
  constexpr double guard = 1e-12;
  std::vector<std::vector<double>> cost(n, std::vector<double>(n));
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) cost[r][c] = 1.0 / std::max(std::abs(w(r, c)), guard);
  const std::vector<int> col_of_row = solve_assignment(cost);
  std::vector<int> row_of_output(n, -1);
  for (int r = 0; r < n; ++r) row_of_output[col_of_row[r]] = r;
  return row_of_output;
}

Eigen::MatrixXd apply_row_permutation(const Eigen::MatrixXd& w, const std::vector<int>& rows) {
  Eigen::MatrixXd out(w.rows(), w.cols());
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) out.row(i) = w.row(rows[i]);
  return out;
}

Eigen::MatrixXd rescale_rows(const Eigen::MatrixXd& w_permuted) {
  Eigen::MatrixXd out = w_permuted;
  for (int i = 0; i < out.rows(); ++i) {
    const double d = out(i, i);
    if (std::abs(d) < 1e-12)
      throw ZeroDiagonal("diagonal entry " + std::to_string(i) + " below guard");
    out.row(i) /= d;
  }
  return out;
}

Eigen::MatrixXd dataset_matrix(const ObservationalDataset& data) {
  Eigen::MatrixXd m(data.rows.size(), data.n_cols);
  for (int r = 0; r < static_cast<int>(data.rows.size()); ++r)
    for (int c = 0; c < data.n_cols; ++c) m(r, c) = data.rows[r][c];
  return m;
}

CausalModel learn_model(const ObservationalDataset& data, double tau, std::uint64_t seed,
                        const IcaOptions& base_options) {
  IcaOptions options = base_options;
  options.tau = tau;
  CausalModel model;
  model.initiating_line = data.initiating_line;
  model.tau = tau;

  // The assignment pairs rows against the dense unmixing: thresholding
  // first can leave no feasible permutation on rank-deficient anomaly
  // data. The tau cut is applied to the normalized edge coefficients
  // instead, which is where the sparsity matters.
  Eigen::MatrixXd w_dense;
  sparse_ica(dataset_matrix(data), seed, options, &model.ica, &w_dense);
  const Eigen::MatrixXd w_star =
      rescale_rows(apply_row_permutation(w_dense, best_assignment(w_dense)));
  model.b = Eigen::MatrixXd::Identity(w_star.rows(), w_star.cols()) - w_star;
  model.b.diagonal().setZero();
  for (int i = 0; i < model.b.rows(); ++i) {
    const double cut = tau * std::max(1.0, model.b.row(i).cwiseAbs().maxCoeff());
    for (int j = 0; j < model.b.cols(); ++j)
      if (std::abs(model.b(i, j)) < cut) model.b(i, j) = 0.0;
  }
  return model;
}

CausalModelSet learn_model_set(const std::vector<ObservationalDataset>& datasets,
                               const LineUniverse& universe, double tau, std::uint64_t seed,
                               const IcaOptions& base_options, int threads) {
  CausalModelSet set;
  set.universe = universe;
  const int n = static_cast<int>(datasets.size());
  std::vector<CausalModel> models(n);
  std::vector<std::pair<int, std::string>> errors(n, {-1, ""});
  parallel_for(
      n,
      [&](int i) {
        try {
          IcaOptions options = base_options;
          options.root_col = universe.position(datasets[i].initiating_line);
          models[i] = learn_model(datasets[i], tau,
                                  Rng::mix(seed, datasets[i].initiating_line), options);
        } catch (const std::exception& e) {
          errors[i] = {datasets[i].initiating_line, e.what()};
        }
      },
      threads);
  for (int i = 0; i < n; ++i) {
    if (errors[i].first >= 0)
      set.failures.push_back(errors[i]);
    else
      set.models.emplace(models[i].initiating_line, std::move(models[i]));
  }
  return set;
}

}  // namespace gridcausal
