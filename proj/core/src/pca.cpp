#include "mesc/structure/pca.hpp"

#include <cstdio>
#include <stdexcept>

#include <Eigen/Dense>

namespace mesc::structure {

std::vector<float> ReductionModel::reduce(const float* x) const {
  std::vector<float> out(r, 0.0f);
  for (size_t j = 0; j < r; ++j) {
    double acc = 0.0;
    for (size_t i = 0; i < input_dim; ++i)
      acc += (static_cast<double>(x[i]) - mean[i]) * components[i * r + j];
    out[j] = static_cast<float>(acc);
  }
  return out;
}

std::vector<float> ReductionModel::reduce_all(const std::vector<float>& data,
                                              size_t n) const {
  if (data.size() != n * input_dim)
    throw std::invalid_argument("reduce_all: data size does not match n x input_dim");
  std::vector<float> out(n * r);
  for (size_t i = 0; i < n; ++i) {
    auto row = reduce(data.data() + i * input_dim);
    std::copy(row.begin(), row.end(), out.begin() + i * r);
  }
  return out;
}

ReductionModel fit_reduction(const std::vector<float>& data, size_t n, size_t dim,
                             size_t r) {
  if (n == 0 || dim == 0) throw std::invalid_argument("fit_reduction: empty input");
  if (data.size() != n * dim)
    throw std::invalid_argument("fit_reduction: data size does not match n x dim");
  if (r == 0) throw std::invalid_argument("fit_reduction: r must be >= 1");
  if (r > dim) throw std::invalid_argument("fit_reduction: r exceeds input dim");

  Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < dim; ++j)
      mu[static_cast<Eigen::Index>(j)] += data[i * dim + j];
  mu /= static_cast<double>(n);

  Eigen::MatrixXd cov =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  Eigen::VectorXd centered(static_cast<Eigen::Index>(dim));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < dim; ++j)
      centered[static_cast<Eigen::Index>(j)] = data[i * dim + j] - mu[static_cast<Eigen::Index>(j)];
    cov.noalias() += centered * centered.transpose();
  }
  cov /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("fit_reduction: eigendecomposition failed");
  const auto& evals = solver.eigenvalues();    // ascending
  const auto& evecs = solver.eigenvectors();

  // Effective rank: eigenvalues below a relative tolerance carry no variance.
  const double max_eval = std::max(evals[static_cast<Eigen::Index>(dim) - 1], 0.0);
  const double tol = std::max(max_eval, 1.0) * 1e-9;
  size_t rank = 0;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(dim); ++i)
    if (evals[i] > tol) ++rank;
  size_t r_eff = r;
  if (rank < r) {
    r_eff = std::max<size_t>(rank, 1);
    std::fprintf(stderr,
                 "[fit_reduction] warning: covariance rank %zu < requested r=%zu, "
                 "reducing to r=%zu\n",
                 rank, r, r_eff);
  }

  ReductionModel model;
  model.input_dim = dim;
  model.r = r_eff;
  model.mean.resize(dim);
  for (size_t j = 0; j < dim; ++j) model.mean[j] = static_cast<float>(mu[static_cast<Eigen::Index>(j)]);
  model.components.assign(dim * r_eff, 0.0f);
  for (size_t k = 0; k < r_eff; ++k) {
    // k-th largest eigenvalue sits at column dim-1-k of the ascending solver.
    const Eigen::Index col = static_cast<Eigen::Index>(dim - 1 - k);
    Eigen::Index flip_idx = 0;
    evecs.col(col).cwiseAbs().maxCoeff(&flip_idx);
    const double sign = evecs(flip_idx, col) < 0.0 ? -1.0 : 1.0;
    for (size_t j = 0; j < dim; ++j)
      model.components[j * r_eff + k] =
          static_cast<float>(sign * evecs(static_cast<Eigen::Index>(j), col));
  }
  return model;
}

}  // namespace mesc::structure
