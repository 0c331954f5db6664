#pragma once

#include "bicnet/core_types.hpp"
#include "bicnet/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <string>
#include <vector>

#include <unistd.h>

namespace testing {

using namespace bicnet;

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("bicnet_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline bool any_contains(const std::vector<std::string>& lines, const std::string& needle) {
  return std::any_of(lines.begin(), lines.end(), [&](const std::string& l) { return l.find(needle) != std::string::npos; });
}

// Zero loadings, flat paths, unit variances.
inline ChainState blank_state(const Dimensions& d) {
  ChainState st;
  for (int s = 0; s < d.S; ++s) {
    st.lambda.push_back(Matrix::Zero(d.N, d.K));
    st.z.push_back(IndicatorMatrix::Zero(d.N, d.K));
  }
  st.cond.assign(d.conditions(), std::vector<ConditionState>(d.S));
  for (int g = 0; g < d.conditions(); ++g)
    for (auto& c : st.cond[g]) {
      c.F = Matrix::Zero(d.K, d.T[g]);
      c.H = Matrix::Zero(d.K, d.T[g]);
      c.mu = Vector::Zero(d.K);
      c.phi = Vector::Constant(d.K, 0.5);
      c.delta2 = Vector::Ones(d.K);
      c.sigma2 = Vector::Ones(d.N);
    }
  st.pi0 = Matrix::Constant(d.N, d.K, 0.5);
  return st;
}

inline Matrix random_matrix(int rows, int cols, Rng& rng, double sd = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = sd * rng.normal();
  return m;
}

inline double sample_mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_var(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

// Standard errors between an i.i.d. sample mean and an exact mean.
inline double mean_z(const std::vector<double>& v, double exact_mean, double exact_var) {
  return (sample_mean(v) - exact_mean) / std::sqrt(exact_var / static_cast<double>(v.size()));
}

// Batch-means standard error for autocorrelated chains.
inline double batch_se(const std::vector<double>& v, int batches = 50) {
  const std::size_t len = v.size() / batches;
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += v[b * len + i];
    means.push_back(s / static_cast<double>(len));
  }
  return std::sqrt(sample_var(means) / batches);
}

}  // namespace testing
