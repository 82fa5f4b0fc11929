#pragma once

// The random mapping (g, h) of a model, the filter kernel and its exact
// finite-support pushforwards, and the transition operator T.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "hmmerg/measures.hpp"
#include "hmmerg/model.hpp"

namespace hmmerg {

// g(x,a) = ||x M_a||, a density w.r.t. tau.
double likelihood(const HmmModel& model, const Density& x, std::size_t a);
// h(x,a) = x M_a / ||x M_a||, or x itself when the likelihood vanishes.
Density update(const HmmModel& model, const Density& x, std::size_t a);

// Exact law delta_x P.
PointMassMeasure pushforward(const HmmModel& model, const Density& x);

struct PushforwardNode {
  std::vector<std::size_t> obs_sequence;
  Density point;
  double weight = 0.0;
};

struct PushforwardOptions {
  double prune_eps = 0.0;
  // Maximum number of (node, observation) expansions over the whole run.
  std::size_t budget = 10'000'000;
  // Merge coincident atoms after every level.
  bool merge_levels = true;
  double merge_tol = 1e-12;
};

struct PushforwardResult {
  std::vector<PushforwardNode> nodes;
  double pruned_mass = 0.0;
  std::size_t expansions = 0;

  PointMassMeasure measure() const;
};

// Exact law delta_x P^n by recursion over observation sequences.
PushforwardResult pushforward_n(const HmmModel& model, const Density& x, std::size_t n,
                                const PushforwardOptions& options = {});

using LevelVisitor = std::function<void(std::size_t level, const PushforwardResult& partial)>;

// Same enumeration, calling visit after every level 0..n.
PushforwardResult pushforward_levels(const HmmModel& model, const Density& x, std::size_t n,
                                     const PushforwardOptions& options, const LevelVisitor& visit);

// mu P^n for a finitely supported mu; atoms merged when options.merge_levels.
PointMassMeasure pushforward_measure(const HmmModel& model, const PointMassMeasure& mu, std::size_t n,
                                     const PushforwardOptions& options = {}, double* pruned_mass = nullptr);

// T^n u (x)
double apply_T(const HmmModel& model, const LipschitzFunction& u, const Density& x, std::size_t n,
               const PushforwardOptions& options = {});

struct FilterTrajectory {
  std::vector<Density> states;  // Z_0 .. Z_n
  std::vector<std::size_t> zero_likelihood_steps;
};

FilterTrajectory run_filter(const HmmModel& model, const Density& x0, std::span<const std::size_t> observations);

struct LipschitzProbeRow {
  std::size_t n = 0;
  double max_ratio = 0.0;
  bool within_three_gamma = true;
  std::optional<bool> within_one_step_bound;  // only for n = 1
};

struct LipschitzProbeReport {
  std::string function;
  double gamma = 0.0;
  double sup_norm = 0.0;
  std::vector<LipschitzProbeRow> rows;
  std::size_t pairs = 0;
  bool passed = true;
};

// Ratios |T^n u(x) - T^n u(y)| / delta_TV(x,y) over all pairs of the given
// evaluation points, for n = 1..n_max.
LipschitzProbeReport lipschitz_probe(const HmmModel& model, const LipschitzFunction& u, std::size_t n_max,
                                     std::span<const Density> points, const PushforwardOptions& options = {});

// Random pairs drawn from Dirichlet(1,...,1) on K.
LipschitzProbeReport lipschitz_probe_sampled(const HmmModel& model, const LipschitzFunction& u,
                                             std::size_t n_max, std::size_t sample_pairs, std::uint64_t seed);

// Norm inequality for unnormalized positive-mass y1, y2:
// || y1/||y1|| - y2/||y2|| || <= 2 ||y1 - y2|| / ||y1||. Returns (lhs, rhs).
std::pair<double, double> norm_inequality(const Density& y1, const Density& y2, const Vector& lambda);

// Empirical lower bound on gamma(u): max sampled |u(x)-u(y)|/delta_TV(x,y).
double estimate_gamma(const LipschitzFunction& u, const Vector& lambda, std::size_t samples, std::uint64_t seed);

// Uniform (Dirichlet(1,...,1)) point of K.
Density sample_simplex(const Vector& lambda, std::mt19937_64& rng);

}  // namespace hmmerg
