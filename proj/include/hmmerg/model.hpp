#pragma once

// Hidden Markov models with densities on finite weighted grids.
//
// A model is given by state cells with base weights lambda, observation cells
// with base weights tau, and a density m(s,t,a) of the joint
// "move to t and emit a" law with respect to lambda x tau. Densities over
// states (elements of K) are stored as values w.r.t. lambda, so the total
// mass of x is sum_s x(s) lambda(s).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hmmerg/error.hpp"

namespace hmmerg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Density over state cells with respect to lambda.
using Density = Eigen::VectorXd;

// Weighted finite set of cells. Used for both the state and the observation
// space.
class CellSpace {
 public:
  CellSpace() = default;
  CellSpace(std::vector<std::string> ids, Vector weights);

  // n cells named "1".."n" with unit weights.
  static CellSpace counting(std::size_t n);

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const Vector& weights() const noexcept { return weights_; }
  double weight(std::size_t i) const { return weights_(static_cast<Eigen::Index>(i)); }

  std::optional<std::size_t> index_of(const std::string& id) const;
  double measure(std::span<const std::size_t> subset) const;

  bool operator==(const CellSpace& other) const;

 private:
  std::vector<std::string> ids_;
  Vector weights_;
};

using StateSpace = CellSpace;
using ObsSpace = CellSpace;

// Raw input for build_model: one |S| x |S| density slice per observation.
struct ModelSpec {
  StateSpace states;
  ObsSpace obs;
  std::vector<Matrix> m;  // m[a](s, t)
};

class HmmModel {
 public:
  const StateSpace& states() const noexcept { return states_; }
  const ObsSpace& obs() const noexcept { return obs_; }
  std::size_t num_states() const noexcept { return states_.size(); }
  std::size_t num_obs() const noexcept { return obs_.size(); }
  const Vector& lambda() const noexcept { return states_.weights(); }
  const Vector& tau() const noexcept { return obs_.weights(); }

  double density(std::size_t s, std::size_t t, std::size_t a) const {
    return m_[a](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
  }
  const Matrix& density_slice(std::size_t a) const { return m_.at(a); }

  // M_a with entries m(s,t,a) lambda(t); acts on mass row vectors.
  const Matrix& stepping(std::size_t a) const { return stepping_.at(a); }
  // P(s,t) = p(s,t) lambda(t).
  const Matrix& markov() const noexcept { return markov_; }

  // Largest relative deviation of a row integral from 1 before renormalization.
  double normalization_residual() const noexcept { return residual_; }

 private:
  friend HmmModel build_model(const ModelSpec& spec);

  StateSpace states_;
  ObsSpace obs_;
  std::vector<Matrix> m_;
  std::vector<Matrix> stepping_;
  Matrix markov_;
  double residual_ = 0.0;
};

inline constexpr double kStochasticTolerance = 1e-9;

HmmModel build_model(const ModelSpec& spec);

Matrix stepping_kernel(const HmmModel& model, std::size_t a);
Matrix stepping_kernel(const HmmModel& model, const std::string& obs_id);
Matrix markov_kernel(const HmmModel& model);

HmmModel compose(const HmmModel& first, const HmmModel& second);
HmmModel iterate(const HmmModel& model, std::size_t n,
                 std::size_t max_obs = 10'000'000);

// Mass/density conversions relative to lambda.
Vector to_mass(const Density& x, const Vector& lambda);
Density to_density(const Vector& mass, const Vector& lambda);
double total_mass(const Density& x, const Vector& lambda);
// Density of the unit point mass at state s.
Density vertex(std::size_t s, const Vector& lambda);
Density uniform_density(const Vector& lambda);

// Unnormalized xK for a mass-acting kernel K (e.g. a stepping matrix).
Density push_density(const Density& x, const Matrix& kernel, const Vector& lambda);

struct ErgodicityReport {
  std::vector<double> sup_tv;  // sup_s ||P^n(s,.) - pi||, n = 0,1,...
  double stationarity_residual = 0.0;
  bool pi_converged = false;
  std::size_t power_iterations = 0;
  bool ergodic = false;  // sup_tv fell below tol within the horizon
  std::optional<std::size_t> mixing_n;
  bool periodic_suspected = false;
  std::string verdict;
};

struct StationaryResult {
  Density pi;
  ErgodicityReport report;
};

StationaryResult stationary(const HmmModel& model, double tol = 1e-12,
                            std::size_t power_horizon = 1'000'000,
                            std::size_t report_horizon = 10'000);

struct PathStep {
  std::size_t state;
  std::size_t obs;
};

struct SimulatedPath {
  std::size_t initial_state = 0;
  std::vector<PathStep> steps;
};

SimulatedPath simulate(const HmmModel& model, const Density& x0, std::size_t n,
                       std::uint64_t seed);

}  // namespace hmmerg
