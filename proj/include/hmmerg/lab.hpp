#pragma once

// Example model builders, fixtures and end-to-end ergodicity reports.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hmmerg/contraction.hpp"
#include "hmmerg/coupling.hpp"
#include "hmmerg/filter.hpp"
#include "hmmerg/measures.hpp"
#include "hmmerg/model.hpp"

namespace hmmerg {

// m(s,t,a) = p(s,t) I_{S_a}(t) on counting states; observation a indexes the
// partition cell S_a. Cells must be disjoint, nonempty and cover S.
HmmModel example_partition(const Matrix& p, const std::vector<Subset>& partition);

struct PartitionCellCheck {
  std::size_t cell = 0;
  double d0 = 0.0;  // min p on S_a x S_a (0 if some entry vanishes)
  double big_d0 = 0.0;
  double pi_mass = 0.0;
  bool holds = false;
  std::optional<PCertificate> certificate;  // F0 = S_a, B0 = {a}
};

struct PartitionHypotheses {
  std::vector<PartitionCellCheck> cells;
  std::optional<std::size_t> first_cell;  // first a0 meeting the hypotheses
};

// Per cell: p bounded away from 0 on S_a x S_a and pi(S_a) > 0.
PartitionHypotheses partition_hypotheses(const Matrix& p, const std::vector<Subset>& partition, const Density& pi);

// m(s,t,a) = p(s,t) q(t,a) on counting states with observation weights tau.
// Requires sum_a q(t,a) tau(a) = 1 for every t.
HmmModel example_product(const Matrix& p, const Matrix& q, const Vector& tau);

struct ProductHypotheses {
  bool supports_inside = false;  // S+(a) = {t : q(t,a) > 0} within F0 for a in B0
  double c0 = 0.0, big_c0 = 0.0;  // range of q on the supports
  double c1 = 0.0, big_c1 = 0.0;  // range of p on F0 x F0
  PCheck structural;               // check_condition_P on the model
  std::optional<PCertificate> certificate;  // structural one with d0 = c0 c1, D0 = C0 C1
};

ProductHypotheses product_hypotheses(const Matrix& p, const Matrix& q, const HmmModel& model, const Density& pi,
                                     const Subset& f0, const Subset& b0);

// Fixtures.
HmmModel m2_model();                // p = [[.7,.3],[.3,.7]], q in {.8,.2}
HmmModel two_state_partition();     // p as above, partition {{1},{2}}
HmmModel periodic_two_cycle();      // deterministic swap, one observation
HmmModel parity_walk();             // 4-cycle lazy walk observed through parity
// Random model with Dirichlet-like rows, random lambda and tau, and a given
// chance of zero density entries (rows are kept nonzero).
HmmModel random_model(std::mt19937_64& rng, std::size_t states, std::size_t obs, double zero_chance = 0.0);

struct RateFit {
  std::optional<double> rate;  // geometric rate from log least squares
  double residual = 0.0;       // rms residual of the log fit
};

// Fit over values[from..]; nonpositive values are skipped.
RateFit fit_geometric_rate(const std::vector<double>& values, std::size_t from = 0);

struct WeakContractionRow {
  std::size_t n = 0;
  double distance = 0.0;  // exact d_K(delta_x P^n, delta_y P^n)
  double floor = 0.0;     // ||x P^n - y P^n||
  std::size_t atoms_x = 0, atoms_y = 0;
  double pruned_x = 0.0, pruned_y = 0.0;
  std::string method;
};

struct WeakContractionSeries {
  Density x;
  Density y;
  std::vector<WeakContractionRow> rows;
  RateFit fit;  // over the last half
  bool floor_respected = true;
  std::optional<std::size_t> first_below;  // first n with distance below threshold
};

struct WeakContractionReport {
  std::vector<WeakContractionSeries> series;
  std::size_t n_max = 0;
  double threshold = 0.0;
  double prune_eps = 0.0;
  double merge_tol = 0.0;
  bool passed = true;  // floor respected everywhere
};

// With stop_below > 0 a series stops at the first n whose distance is below it.
WeakContractionReport weak_contraction_report(const HmmModel& model,
                                              const std::vector<std::pair<Density, Density>>& pairs,
                                              std::size_t n_max, const PushforwardOptions& options = {},
                                              double stop_below = 0.0);

// Evaluation grid over K: barycentric mesh for |S| <= 3, Dirichlet samples
// otherwise. step <= 0 picks 0.02 / 0.05 by dimension.
std::vector<Density> simplex_grid(const Vector& lambda, double step = 0.0, std::size_t samples = 200,
                                  std::uint64_t seed = 1);

struct OscRow {
  std::size_t n = 0;
  double max = 0.0;
  double min = 0.0;
  double osc = 0.0;
};

struct OscSeries {
  std::string function;
  std::vector<OscRow> rows;  // n = 0..n_max
  bool monotone = true;
  RateFit fit;
  bool decays = false;
  bool plateau = false;
};

struct OscDecayReport {
  std::vector<OscSeries> series;
  std::size_t grid_points = 0;
  double prune_eps = 0.0;
  double merge_tol = 0.0;
};

OscDecayReport osc_decay_report(const HmmModel& model, const std::vector<LipschitzFunction>& functions,
                                std::size_t n_max, const std::vector<Density>& grid,
                                const PushforwardOptions& options = {});

struct BarycenterIdentityReport {
  double max_residual = 0.0;
  std::size_t worst_start = 0;
  std::size_t worst_n = 0;
  bool passed = false;  // max_residual < 1e-10
};

BarycenterIdentityReport barycenter_identity_check(const HmmModel& model, const std::vector<Density>& starts,
                                                   std::size_t n_max, const PushforwardOptions& options = {});

struct TightnessSeries {
  Density start;
  std::vector<double> mass;  // n = 0..n_max
  double liminf = 0.0;       // min over the last half
};

struct TightnessReport {
  Density x0;
  double epsilon = 0.0;
  std::vector<TightnessSeries> series;
  double liminf = 0.0;  // min over starts
  double pruned_mass = 0.0;
};

// Mass of delta_x P^n in the closed TV ball of radius epsilon around x0.
TightnessReport tightness_probe(const HmmModel& model, const Density& x0, double epsilon,
                                const std::vector<Density>& starts, std::size_t n_max,
                                const PushforwardOptions& options = {});

// Normalized left Perron density of p restricted to F0 x F0 (zero off F0):
// the limit of x K^n / ||x K^n|| for x(F0) > 0 under the restricted kernel.
Density perron_density(const HmmModel& model, const Subset& f0);

struct CouplingInequalityCheck {
  std::size_t n = 0;
  double distance = 0.0;  // d_K(mu P^N, nu P^N) on the extremal pair
  double alpha = 0.0;     // certified xi^2 beta eta
  double achieved_alpha = 0.0;
  double bound = 0.0;     // 2 - alpha (2 - rho)
  bool holds = false;
};

// d_K at n = N for the extremal barycenter-pi pair against the E1 constants.
CouplingInequalityCheck coupling_inequality_check(const HmmModel& model, const Density& pi,
                                                  const E1Certificate& cert,
                                                  const CoupledChainOptions& options = {});

// Test functions on K.
LipschitzFunction coordinate_function(std::size_t s, const Vector& lambda);        // x({s})
LipschitzFunction subset_function(const Subset& f, const Vector& lambda);          // x(F)
LipschitzFunction distance_function(const Density& z, const Vector& lambda);       // ||x - z||
LipschitzFunction max_coordinate_function(const Vector& lambda);                   // max_s x({s})
LipschitzFunction constant_function(double c);

}  // namespace hmmerg
