#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bicnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndicatorMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using IndicatorVector = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;

// Bad input or configuration; the CLI maps it to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sampler hit a non-finite or non-positive-definite quantity; exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Condition index 0 is rest; task conditions are 1..G.
struct Dimensions {
  int N = 0;
  int K = 0;
  int S = 0;
  std::vector<int> T;  // per condition

  int conditions() const { return static_cast<int>(T.size()); }
  long total_time() const;  // sum over conditions, one subject
  void validate() const;
};

// y[g][s] is N x T_g, time along columns.
struct Dataset {
  std::vector<std::vector<Matrix>> y;
  std::vector<std::string> condition_names;
  std::vector<std::string> subject_ids;
  bool has_rest = true;
  // Optional behavioral response per condition (length S, empty when absent).
  std::vector<Vector> behavior;

  int regions() const;
  int subjects() const { return y.empty() ? 0 : static_cast<int>(y.front().size()); }
  int conditions() const { return static_cast<int>(y.size()); }
  Dimensions dimensions(int K) const;
  void validate() const;
};

struct Hyperparameters {
  double b_mu = 0.0;
  double B_mu = 1.0;
  double a_phi = 20.0;
  double b_phi = 2.5;
  double B_delta = 0.5;
  double c_sigma = 2.0;
  double d_sigma = 1.0;
  double tau2_load = 1.0;
  double c = 2.0;
  double a_default = 0.5;  // fills A when no prior map is given
  Matrix A;                // N x K prior-mean map for the group inclusion probabilities
  double a = 1.0;
  double b = 1.0;
  double S2 = 1.0;
  double alpha1 = 1.0;
  double alpha2 = 1.0;

  double prior_mean(int n, int k) const { return A.size() == 0 ? a_default : A(n, k); }
  void validate(const Dimensions& dims) const;
};

struct ConditionState {
  Matrix F;  // K x T
  Matrix H;  // K x T
  Vector mu;
  Vector phi;
  Vector delta2;
  Vector sigma2;  // length N
};

struct RegressionState {
  Vector beta;
  IndicatorVector pi;
  double theta = 0.5;
  double tau2 = 1.0;
  double sigma2 = 1.0;
};

struct ChainState {
  std::vector<Matrix> lambda;          // [s] N x K
  std::vector<IndicatorMatrix> z;      // [s] N x K
  std::vector<std::vector<ConditionState>> cond;  // [g][s]
  Matrix pi0;                          // N x K
  std::map<int, RegressionState> regression;  // keyed by task condition
};

// Empty result means every invariant holds.
std::vector<std::string> validate_state(const ChainState& state, const Dimensions& dims);

// Lambda * diag(omega) * Lambda' + diag(gamma).
Matrix reconstruct_covariance(const Matrix& lambda, const Vector& omega, const Vector& gamma);

struct StoragePolicy {
  long total = 0;
  long burn_in = 0;
  long thin = 1;

  // Sweeps are numbered from 1.
  bool keeps(long sweep) const { return sweep > burn_in && (sweep - burn_in) % thin == 0; }
  long stored_count() const { return total > burn_in ? (total - burn_in) / thin : 0; }
  void validate() const;
};

class DrawSeries {
 public:
  DrawSeries() = default;
  DrawSeries(std::string name, std::vector<std::size_t> shape);

  const std::string& name() const { return name_; }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t draw_size() const { return draw_size_; }
  std::size_t size() const { return index_.size(); }
  bool empty() const { return index_.empty(); }

  void reserve(std::size_t draws) { values_.reserve(draws * draw_size_); index_.reserve(draws); }
  void push(std::span<const double> draw, long sweep);
  std::span<const double> draw(std::size_t i) const;
  std::span<double> draw(std::size_t i);
  long sweep_of(std::size_t i) const { return index_.at(i); }
  const std::vector<double>& values() const { return values_; }
  const std::vector<long>& sweeps() const { return index_; }

  // All draws of one flattened entry.
  std::vector<double> entry(std::size_t offset) const;

 private:
  std::string name_;
  std::vector<std::size_t> shape_;
  std::size_t draw_size_ = 0;
  std::vector<double> values_;
  std::vector<long> index_;
};

struct PosteriorDraws {
  StoragePolicy policy;
  std::map<std::string, DrawSeries> series;

  DrawSeries& add(const std::string& name, std::vector<std::size_t> shape);
  const DrawSeries& at(const std::string& name) const;
  bool has(const std::string& name) const { return series.count(name) > 0; }
};

}  // namespace bicnet
