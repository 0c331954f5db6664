#include "bicnet/baseline.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace bicnet::baseline {

Matrix varimax(const Matrix& loadings, int max_iter, double tol) {
  const auto N = loadings.rows(), K = loadings.cols();
  if (K < 2) return loadings;
  Matrix R = Matrix::Identity(K, K);
  double objective = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Matrix L = loadings * R;
    const Matrix L3 = L.array().cube().matrix();
    const Vector col_ss = L.array().square().colwise().sum().transpose();
    const Matrix target = L3 - L * col_ss.asDiagonal() / static_cast<double>(N);
    Eigen::JacobiSVD<Matrix> svd(loadings.transpose() * target, Eigen::ComputeFullU | Eigen::ComputeFullV);
    R = svd.matrixU() * svd.matrixV().transpose();
    const double next = svd.singularValues().sum();
    if (next < objective * (1.0 + tol)) break;
    objective = next;
  }
  return loadings * R;
}

Matrix pca_varimax(const Matrix& y, int K) {
  if (K < 1 || K > y.rows()) throw ValidationError("PCA needs 1 <= K <= regions");
  if (y.cols() < 2) throw ValidationError("PCA needs at least two time points");
  const Matrix centered = y.colwise() - y.rowwise().mean();
  const Matrix cov = centered * centered.transpose() / static_cast<double>(y.cols() - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  const auto N = y.rows();
  Matrix L(N, K);
  for (int k = 0; k < K; ++k) {
    const auto idx = N - 1 - k;  // eigenvalues ascend
    L.col(k) = eig.eigenvectors().col(idx) * std::sqrt(std::max(eig.eigenvalues()[idx], 0.0));
  }
  return varimax(L);
}

Matrix ica_loadings(const Matrix& y, int K, Rng& rng, int max_iter, double tol) {
  const auto N = y.rows(), T = y.cols();
  if (K < 1 || K > N) throw ValidationError("ICA needs 1 <= K <= regions");
  if (T < 2) throw ValidationError("ICA needs at least two time points");
  const Matrix centered = y.colwise() - y.rowwise().mean();
  const Matrix cov = centered * centered.transpose() / static_cast<double>(T - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  double noise = 0.0;
  for (Eigen::Index i = 0; i < N - K; ++i) noise += eig.eigenvalues()[i];
  noise = N > K ? noise / static_cast<double>(N - K) : 0.0;

  Matrix U(N, K);
  Vector scale(K);
  for (int k = 0; k < K; ++k) {
    const auto idx = N - 1 - k;
    U.col(k) = eig.eigenvectors().col(idx);
    const double signal = eig.eigenvalues()[idx] - noise;
    scale[k] = std::sqrt(std::max(signal, 1e-3 * eig.eigenvalues()[N - 1]));
  }
  const Matrix X = scale.cwiseInverse().asDiagonal() * (U.transpose() * centered);  // K x T
  // Exact whitening of the scores themselves.
  const Matrix xcov = X * X.transpose() / static_cast<double>(T - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> xe(xcov);
  const Matrix white = xe.eigenvectors() * xe.eigenvalues().cwiseMax(1e-12).cwiseInverse().cwiseSqrt().asDiagonal() *
                       xe.eigenvectors().transpose();
  const Matrix unwhite = xe.eigenvectors() * xe.eigenvalues().cwiseMax(1e-12).cwiseSqrt().asDiagonal() *
                         xe.eigenvectors().transpose();
  const Matrix Z = white * X;

  auto orthonormalize = [](const Matrix& W) {
    Eigen::SelfAdjointEigenSolver<Matrix> e(W * W.transpose());
    return Matrix(e.eigenvectors() * e.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                  e.eigenvectors().transpose() * W);
  };
  Matrix W(K, K);
  for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = rng.normal();
  W = orthonormalize(W);
  for (int it = 0; it < max_iter; ++it) {
    const Matrix G = (W * Z).array().tanh().matrix();  // K x T
    const Vector gp = (1.0 - G.array().square()).rowwise().mean();
    Matrix next = G * Z.transpose() / static_cast<double>(T) - gp.asDiagonal() * W;
    next = orthonormalize(next);
    const double change = 1.0 - (next * W.transpose()).diagonal().cwiseAbs().minCoeff();
    W = next;
    if (change < tol) break;
  }
  // y ~ U diag(scale) unwhite W' s with unit-variance sources s.
  return U * scale.asDiagonal() * unwhite * W.transpose();
}

Matrix concatenate_conditions(const Dataset& data, int s) {
  Eigen::Index total = 0;
  for (int g = 0; g < data.conditions(); ++g) total += data.y[g][s].cols();
  Matrix out(data.regions(), total);
  Eigen::Index at = 0;
  for (int g = 0; g < data.conditions(); ++g) {
    const Matrix& y = data.y[g][s];
    out.middleCols(at, y.cols()) = y;
    at += y.cols();
  }
  return out;
}

IndicatorMatrix threshold_loadings(const Matrix& loadings, double fraction) {
  IndicatorMatrix z = IndicatorMatrix::Zero(loadings.rows(), loadings.cols());
  for (Eigen::Index k = 0; k < loadings.cols(); ++k) {
    const double cut = fraction * loadings.col(k).cwiseAbs().maxCoeff();
    for (Eigen::Index n = 0; n < loadings.rows(); ++n) z(n, k) = std::abs(loadings(n, k)) >= cut && cut > 0.0;
  }
  return z;
}

}  // namespace bicnet::baseline
