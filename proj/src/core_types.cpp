#include "bicnet/core_types.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace bicnet {

namespace {

std::string where(const char* what, int s, int n, int k) {
  std::ostringstream os;
  os << what << " (s=" << s << ", n=" << n << ", k=" << k << ")";
  return os.str();
}

std::string where(const char* what, int g, int s, const char* field, int i) {
  std::ostringstream os;
  os << what << " (g=" << g << ", s=" << s << ", " << field << "[" << i << "])";
  return os.str();
}

}  // namespace

long Dimensions::total_time() const { return std::accumulate(T.begin(), T.end(), 0L); }

void Dimensions::validate() const {
  if (N < 1 || K < 1 || S < 1) throw ValidationError("dimensions must be positive");
  if (K >= N) throw ValidationError("K < N required");
  if (T.empty()) throw ValidationError("at least one condition required");
  for (int t : T)
    if (t < 1) throw ValidationError("time length must be positive");
}

int Dataset::regions() const {
  if (y.empty() || y.front().empty()) return 0;
  return static_cast<int>(y.front().front().rows());
}

Dimensions Dataset::dimensions(int K) const {
  Dimensions d;
  d.N = regions();
  d.K = K;
  d.S = subjects();
  for (const auto& cond : y) d.T.push_back(cond.empty() ? 0 : static_cast<int>(cond.front().cols()));
  return d;
}

void Dataset::validate() const {
  if (y.empty() || y.front().empty()) throw ValidationError("no series listed");
  const int N = regions();
  const std::size_t S = y.front().size();
  for (std::size_t g = 0; g < y.size(); ++g) {
    if (y[g].size() != S) throw ValidationError("subject count differs between conditions");
    const auto T = y[g].front().cols();
    for (std::size_t s = 0; s < S; ++s) {
      const Matrix& m = y[g][s];
      if (m.rows() != N) throw ValidationError("region count mismatch");
      if (m.cols() != T) throw ValidationError("time length mismatch within condition " + std::to_string(g));
      if (!m.allFinite()) throw ValidationError("non-finite value in series");
    }
  }
  for (std::size_t g = 0; g < behavior.size(); ++g)
    if (behavior[g].size() != 0 && behavior[g].size() != static_cast<Eigen::Index>(S))
      throw ValidationError("behavioral vector length must equal subject count");
}

void Hyperparameters::validate(const Dimensions& dims) const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string(name) + " must be positive");
  };
  positive(B_mu, "B_mu");
  positive(a_phi, "a_phi");
  positive(b_phi, "b_phi");
  positive(B_delta, "B_delta");
  positive(c_sigma, "c_sigma");
  positive(d_sigma, "d_sigma");
  positive(tau2_load, "tau2_load");
  positive(c, "c");
  positive(a, "a");
  positive(b, "b");
  positive(S2, "S2");
  positive(alpha1, "alpha1");
  positive(alpha2, "alpha2");
  if (!std::isfinite(b_mu)) throw ValidationError("b_mu must be finite");
  if (A.size() == 0) {
    if (!(a_default > 0.0 && a_default < 1.0)) throw ValidationError("a_default must lie in (0,1)");
  } else {
    if (A.rows() != dims.N || A.cols() != dims.K) throw ValidationError("A must be N x K");
    if ((A.array() <= 0.0).any() || (A.array() >= 1.0).any())
      throw ValidationError("A entries must lie in (0,1)");
  }
}

std::vector<std::string> validate_state(const ChainState& state, const Dimensions& dims) {
  std::vector<std::string> report;
  if (static_cast<int>(state.lambda.size()) != dims.S || static_cast<int>(state.z.size()) != dims.S) {
    report.emplace_back("loading list size differs from subject count");
    return report;
  }
  for (int s = 0; s < dims.S; ++s) {
    const Matrix& L = state.lambda[s];
    const IndicatorMatrix& Z = state.z[s];
    if (L.rows() != dims.N || L.cols() != dims.K || Z.rows() != dims.N || Z.cols() != dims.K) {
      report.emplace_back("loading shape mismatch (s=" + std::to_string(s) + ")");
      continue;
    }
    for (int k = 0; k < dims.K; ++k)
      for (int n = 0; n < dims.N; ++n) {
        if (Z(n, k) > 1) report.push_back(where("non-binary indicator", s, n, k));
        if (Z(n, k) == 0 && L(n, k) != 0.0) report.push_back(where("nonzero loading with zero indicator", s, n, k));
        if (!std::isfinite(L(n, k))) report.push_back(where("non-finite loading", s, n, k));
      }
  }

  if (static_cast<int>(state.cond.size()) != dims.conditions()) {
    report.emplace_back("condition list size differs from dimensions");
  } else {
    for (int g = 0; g < dims.conditions(); ++g) {
      if (static_cast<int>(state.cond[g].size()) != dims.S) {
        report.emplace_back("subject list size differs in condition " + std::to_string(g));
        continue;
      }
      for (int s = 0; s < dims.S; ++s) {
        const ConditionState& c = state.cond[g][s];
        const int T = dims.T[g];
        if (c.F.rows() != dims.K || c.F.cols() != T || c.H.rows() != dims.K || c.H.cols() != T)
          report.push_back(where("factor/volatility shape mismatch", g, s, "F", 0));
        if (c.mu.size() != dims.K || c.phi.size() != dims.K || c.delta2.size() != dims.K ||
            c.sigma2.size() != dims.N) {
          report.push_back(where("parameter length mismatch", g, s, "mu", 0));
          continue;
        }
        for (int k = 0; k < dims.K; ++k) {
          if (!(std::abs(c.phi[k]) < 1.0)) report.push_back(where("non-stationary AR coefficient", g, s, "phi", k));
          if (!(c.delta2[k] > 0.0)) report.push_back(where("non-positive variance", g, s, "delta2", k));
          if (!std::isfinite(c.mu[k])) report.push_back(where("non-finite level", g, s, "mu", k));
        }
        for (int n = 0; n < dims.N; ++n)
          if (!(c.sigma2[n] > 0.0) || !std::isfinite(c.sigma2[n]))
            report.push_back(where("non-positive variance", g, s, "sigma2", n));
        if (!c.F.allFinite() || !c.H.allFinite()) report.push_back(where("non-finite latent path", g, s, "F", 0));
      }
    }
  }

  if (state.pi0.rows() != dims.N || state.pi0.cols() != dims.K) {
    report.emplace_back("group inclusion map shape mismatch");
  } else if ((state.pi0.array() <= 0.0).any() || (state.pi0.array() >= 1.0).any()) {
    report.emplace_back("inclusion probability outside (0,1)");
  }

  for (const auto& [g, r] : state.regression) {
    const std::string tag = " (task " + std::to_string(g) + ")";
    if (r.beta.size() != r.pi.size()) {
      report.push_back("regression length mismatch" + tag);
      continue;
    }
    for (Eigen::Index k = 0; k < r.beta.size(); ++k)
      if (r.pi[k] == 0 && r.beta[k] != 0.0) report.push_back("nonzero regression coefficient with zero indicator" + tag);
    if (!(r.theta > 0.0 && r.theta < 1.0)) report.push_back("regression inclusion rate outside (0,1)" + tag);
    if (!(r.tau2 > 0.0) || !(r.sigma2 > 0.0)) report.push_back("non-positive variance" + tag);
  }
  return report;
}

Matrix reconstruct_covariance(const Matrix& lambda, const Vector& omega, const Vector& gamma) {
  if (omega.size() != lambda.cols() || gamma.size() != lambda.rows())
    throw ValidationError("dimension mismatch in covariance reconstruction");
  Matrix sigma = lambda * omega.asDiagonal() * lambda.transpose();
  sigma.diagonal() += gamma;
  // exact symmetry regardless of summation order
  return 0.5 * (sigma + sigma.transpose());
}

void StoragePolicy::validate() const {
  if (total < 1) throw ValidationError("iterations must be positive");
  if (burn_in < 0 || burn_in >= total) throw ValidationError("burn-in < iterations required");
  if (thin < 1) throw ValidationError("thinning must be >= 1");
}

DrawSeries::DrawSeries(std::string name, std::vector<std::size_t> shape)
    : name_(std::move(name)), shape_(std::move(shape)) {
  draw_size_ = std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
}

void DrawSeries::push(std::span<const double> draw, long sweep) {
  if (draw.size() != draw_size_) throw std::invalid_argument("draw size mismatch for " + name_);
  values_.insert(values_.end(), draw.begin(), draw.end());
  index_.push_back(sweep);
}

std::span<const double> DrawSeries::draw(std::size_t i) const {
  return std::span<const double>(values_).subspan(i * draw_size_, draw_size_);
}

std::span<double> DrawSeries::draw(std::size_t i) {
  return std::span<double>(values_).subspan(i * draw_size_, draw_size_);
}

std::vector<double> DrawSeries::entry(std::size_t offset) const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = values_[i * draw_size_ + offset];
  return out;
}

DrawSeries& PosteriorDraws::add(const std::string& name, std::vector<std::size_t> shape) {
  auto [it, inserted] = series.try_emplace(name, name, std::move(shape));
  if (!inserted) throw std::invalid_argument("duplicate draw series " + name);
  return it->second;
}

const DrawSeries& PosteriorDraws::at(const std::string& name) const {
  auto it = series.find(name);
  if (it == series.end()) throw ValidationError("draw series missing: " + name);
  return it->second;
}

}  // namespace bicnet
