#include "hmmerg/filter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

namespace hmmerg {

namespace {

void check_dimension(const HmmModel& model, const Density& x) {
  if (static_cast<std::size_t>(x.size()) != model.num_states())
    fail(ErrorCode::SpaceMismatch, "density has " + std::to_string(x.size()) + " cells, model has " +
                                       std::to_string(model.num_states()));
}

void check_obs(const HmmModel& model, std::size_t a) {
  if (a >= model.num_obs()) fail(ErrorCode::UnknownObservation, "observation index " + std::to_string(a));
}

// Unnormalized x M_a as a density, and its mass.
std::pair<Density, double> step(const HmmModel& model, const Density& x, std::size_t a) {
  Density y = push_density(x, model.stepping(a), model.lambda());
  const double g = total_mass(y, model.lambda());
  return {std::move(y), g};
}

void merge_nodes(std::vector<PushforwardNode>& nodes, const Vector& lambda, double tol) {
  std::vector<Density> points;
  points.reserve(nodes.size());
  for (const auto& node : nodes) points.push_back(node.point);
  std::size_t groups = 0;
  const auto group = merge_groups(points, lambda, tol, groups);
  if (groups == nodes.size()) return;
  std::vector<PushforwardNode> merged(groups);
  std::vector<char> seen(groups, 0);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    auto& target = merged[group[k]];
    if (!seen[group[k]]) {
      target.obs_sequence = std::move(nodes[k].obs_sequence);
      target.point = std::move(nodes[k].point);
      seen[group[k]] = 1;
    }
    target.weight += nodes[k].weight;
  }
  nodes = std::move(merged);
}

// Calls visit(level, result) for level = 0..n.
template <class Visit>
PushforwardResult expand_levels(const HmmModel& model, const Density& x, std::size_t n,
                                const PushforwardOptions& options, Visit&& visit) {
  check_dimension(model, x);
  PushforwardResult result;
  result.nodes.push_back({{}, x, 1.0});
  visit(std::size_t{0}, std::as_const(result));
  const std::size_t na = model.num_obs();
  for (std::size_t level = 1; level <= n; ++level) {
    if (result.expansions + result.nodes.size() * na > options.budget)
      fail(ErrorCode::BudgetExceeded, "pushforward needs more than " + std::to_string(options.budget) +
                                          " expansions at depth " + std::to_string(level));
    std::vector<PushforwardNode> next;
    next.reserve(result.nodes.size() * na);
    for (const auto& node : result.nodes) {
      for (std::size_t a = 0; a < na; ++a) {
        auto [y, g] = step(model, node.point, a);
        const double w = node.weight * g * model.obs().weight(a);
        if (!(g > 0.0)) continue;
        if (w < options.prune_eps) {
          result.pruned_mass += w;
          continue;
        }
        PushforwardNode child;
        child.obs_sequence = node.obs_sequence;
        child.obs_sequence.push_back(a);
        child.point = y / g;
        child.weight = w;
        next.push_back(std::move(child));
      }
    }
    result.expansions += result.nodes.size() * na;
    if (options.merge_levels) merge_nodes(next, model.lambda(), options.merge_tol);
    result.nodes = std::move(next);
    visit(level, std::as_const(result));
  }
  return result;
}

}  // namespace

double likelihood(const HmmModel& model, const Density& x, std::size_t a) {
  check_dimension(model, x);
  check_obs(model, a);
  return step(model, x, a).second;
}

Density update(const HmmModel& model, const Density& x, std::size_t a) {
  check_dimension(model, x);
  check_obs(model, a);
  auto [y, g] = step(model, x, a);
  if (!(g > 0.0)) return x;
  return y / g;
}

PointMassMeasure pushforward(const HmmModel& model, const Density& x) {
  check_dimension(model, x);
  PointMassMeasure mu;
  for (std::size_t a = 0; a < model.num_obs(); ++a) {
    auto [y, g] = step(model, x, a);
    if (g > 0.0) mu.add(y / g, g * model.obs().weight(a));
  }
  return mu;
}

PointMassMeasure PushforwardResult::measure() const {
  PointMassMeasure mu;
  mu.points.reserve(nodes.size());
  mu.weights.reserve(nodes.size());
  for (const auto& node : nodes) mu.add(node.point, node.weight);
  return mu;
}

PushforwardResult pushforward_n(const HmmModel& model, const Density& x, std::size_t n,
                                const PushforwardOptions& options) {
  return expand_levels(model, x, n, options, [](std::size_t, const PushforwardResult&) {});
}

PushforwardResult pushforward_levels(const HmmModel& model, const Density& x, std::size_t n,
                                     const PushforwardOptions& options, const LevelVisitor& visit) {
  return expand_levels(model, x, n, options, visit);
}

PointMassMeasure pushforward_measure(const HmmModel& model, const PointMassMeasure& mu, std::size_t n,
                                     const PushforwardOptions& options, double* pruned_mass) {
  PointMassMeasure out;
  double pruned = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    const auto one = pushforward_n(model, mu.points[k], n, options);
    pruned += mu.weights[k] * one.pruned_mass;
    for (const auto& node : one.nodes) out.add(node.point, mu.weights[k] * node.weight);
  }
  if (pruned_mass) *pruned_mass = pruned;
  return options.merge_levels ? merge_atoms(out, model.lambda(), options.merge_tol) : out;
}

double apply_T(const HmmModel& model, const LipschitzFunction& u, const Density& x, std::size_t n,
               const PushforwardOptions& options) {
  const auto result = pushforward_n(model, x, n, options);
  double total = 0.0;
  for (const auto& node : result.nodes) total += node.weight * u(node.point);
  return total;
}

FilterTrajectory run_filter(const HmmModel& model, const Density& x0, std::span<const std::size_t> observations) {
  check_dimension(model, x0);
  FilterTrajectory out;
  out.states.reserve(observations.size() + 1);
  out.states.push_back(x0);
  for (std::size_t k = 0; k < observations.size(); ++k) {
    const std::size_t a = observations[k];
    check_obs(model, a);
    auto [y, g] = step(model, out.states.back(), a);
    if (g > 0.0) {
      out.states.push_back(y / g);
    } else {
      out.zero_likelihood_steps.push_back(k + 1);
      out.states.push_back(out.states.back());
    }
  }
  return out;
}

LipschitzProbeReport lipschitz_probe(const HmmModel& model, const LipschitzFunction& u, std::size_t n_max,
                                     std::span<const Density> points, const PushforwardOptions& options) {
  const Vector& lambda = model.lambda();
  const std::size_t np = points.size();
  // values[n-1][p] = T^n u(points[p])
  std::vector<std::vector<double>> values(n_max, std::vector<double>(np, 0.0));
  for (std::size_t p = 0; p < np; ++p) {
    expand_levels(model, points[p], n_max, options,
                  [&](std::size_t level, const PushforwardResult& partial) {
                    if (level == 0) return;
                    double total = 0.0;
                    for (const auto& node : partial.nodes) total += node.weight * u(node.point);
                    values[level - 1][p] = total;
                  });
  }

  LipschitzProbeReport report;
  report.function = u.name;
  report.gamma = u.gamma;
  report.sup_norm = u.sup_norm;
  std::vector<std::vector<double>> tv(np, std::vector<double>(np, 0.0));
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t j = i + 1; j < np; ++j) tv[i][j] = tv_distance(points[i], points[j], lambda);

  for (std::size_t n = 1; n <= n_max; ++n) {
    LipschitzProbeRow row;
    row.n = n;
    const auto& v = values[n - 1];
    for (std::size_t i = 0; i < np; ++i)
      for (std::size_t j = i + 1; j < np; ++j) {
        if (tv[i][j] <= 1e-14) continue;
        row.max_ratio = std::max(row.max_ratio, std::abs(v[i] - v[j]) / tv[i][j]);
      }
    const double slack = 1e-9;
    row.within_three_gamma = row.max_ratio <= 3.0 * u.gamma + slack;
    if (n == 1) row.within_one_step_bound = row.max_ratio <= u.sup_norm + 2.0 * u.gamma + slack;
    report.passed = report.passed && row.within_three_gamma && row.within_one_step_bound.value_or(true);
    report.rows.push_back(row);
  }
  report.pairs = np * (np - 1) / 2;
  return report;
}

Density sample_simplex(const Vector& lambda, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  Vector mass(lambda.size());
  for (Eigen::Index s = 0; s < mass.size(); ++s) mass(s) = expo(rng);
  mass /= mass.sum();
  return to_density(mass, lambda);
}

LipschitzProbeReport lipschitz_probe_sampled(const HmmModel& model, const LipschitzFunction& u,
                                             std::size_t n_max, std::size_t sample_pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Density> points;
  points.reserve(2 * sample_pairs);
  for (std::size_t k = 0; k < 2 * sample_pairs; ++k) points.push_back(sample_simplex(model.lambda(), rng));
  // Pairs are the consecutive points; probe each pair on its own.
  LipschitzProbeReport report;
  report.function = u.name;
  report.gamma = u.gamma;
  report.sup_norm = u.sup_norm;
  report.rows.resize(n_max);
  for (std::size_t n = 1; n <= n_max; ++n) report.rows[n - 1].n = n;
  for (std::size_t k = 0; k < sample_pairs; ++k) {
    const std::array<Density, 2> pair{points[2 * k], points[2 * k + 1]};
    const auto one = lipschitz_probe(model, u, n_max, pair);
    for (std::size_t n = 0; n < n_max; ++n)
      report.rows[n].max_ratio = std::max(report.rows[n].max_ratio, one.rows[n].max_ratio);
  }
  for (auto& row : report.rows) {
    row.within_three_gamma = row.max_ratio <= 3.0 * u.gamma + 1e-9;
    if (row.n == 1) row.within_one_step_bound = row.max_ratio <= u.sup_norm + 2.0 * u.gamma + 1e-9;
    report.passed = report.passed && row.within_three_gamma && row.within_one_step_bound.value_or(true);
  }
  report.pairs = sample_pairs;
  return report;
}

std::pair<double, double> norm_inequality(const Density& y1, const Density& y2, const Vector& lambda) {
  const double m1 = total_mass(y1, lambda);
  const double m2 = total_mass(y2, lambda);
  if (!(m1 > 0.0) || !(m2 > 0.0)) fail(ErrorCode::DivisionByZeroMass, "norm inequality needs positive masses");
  return {tv_distance(y1 / m1, y2 / m2, lambda), 2.0 * tv_distance(y1, y2, lambda) / m1};
}

double estimate_gamma(const LipschitzFunction& u, const Vector& lambda, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double best = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const Density x = sample_simplex(lambda, rng);
    const Density y = sample_simplex(lambda, rng);
    const double d = tv_distance(x, y, lambda);
    if (d > 1e-14) best = std::max(best, std::abs(u(x) - u(y)) / d);
  }
  return best;
}

}  // namespace hmmerg
