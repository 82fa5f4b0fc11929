#include "hmmerg/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hmmerg {

Vector ObsCoupling::row_marginal() const {
  Vector r = diagonal;
  for (const auto& e : off_diagonal) r(static_cast<Eigen::Index>(e.a)) += e.mass;
  return r;
}

Vector ObsCoupling::col_marginal() const {
  Vector c = diagonal;
  for (const auto& e : off_diagonal) c(static_cast<Eigen::Index>(e.b)) += e.mass;
  return c;
}

ObsCoupling vasershtein_obs_coupling(const HmmModel& model, const Density& x, const Density& y) {
  const auto na = static_cast<Eigen::Index>(model.num_obs());
  Vector gx(na), gy(na);
  for (Eigen::Index a = 0; a < na; ++a) {
    const double tau = model.obs().weight(static_cast<std::size_t>(a));
    gx(a) = likelihood(model, x, static_cast<std::size_t>(a)) * tau;
    gy(a) = likelihood(model, y, static_cast<std::size_t>(a)) * tau;
  }
  ObsCoupling out;
  out.diagonal = gx.cwiseMin(gy);
  const Vector ex = gx - out.diagonal;
  const Vector ey = gy - out.diagonal;
  out.excess = ex.sum();
  if (!(out.excess > 0.0)) return out;
  for (Eigen::Index a = 0; a < na; ++a) {
    if (!(ex(a) > 0.0)) continue;
    for (Eigen::Index b = 0; b < na; ++b) {
      if (!(ey(b) > 0.0)) continue;
      out.off_diagonal.push_back({static_cast<std::size_t>(a), static_cast<std::size_t>(b), ex(a) * ey(b) / out.excess});
    }
  }
  return out;
}

double JointFilterMeasure::total_mass() const {
  double total = 0.0;
  for (const auto& atom : atoms) total += atom.weight;
  return total;
}

PointMassMeasure JointFilterMeasure::first_marginal() const {
  PointMassMeasure mu;
  for (const auto& atom : atoms) mu.add(atom.x, atom.weight);
  return mu;
}

PointMassMeasure JointFilterMeasure::second_marginal() const {
  PointMassMeasure mu;
  for (const auto& atom : atoms) mu.add(atom.y, atom.weight);
  return mu;
}

double JointFilterMeasure::mass_within(double rho, const Vector& lambda) const {
  double total = 0.0;
  for (const auto& atom : atoms)
    if (tv_distance(atom.x, atom.y, lambda) < rho) total += atom.weight;
  return total;
}

JointFilterMeasure coupled_filter_step(const HmmModel& model, const Density& x, const Density& y) {
  const ObsCoupling coupling = vasershtein_obs_coupling(model, x, y);
  JointFilterMeasure out;
  for (Eigen::Index a = 0; a < coupling.diagonal.size(); ++a) {
    const double w = coupling.diagonal(a);
    if (!(w > 0.0)) continue;
    const auto obs = static_cast<std::size_t>(a);
    out.atoms.push_back({update(model, x, obs), update(model, y, obs), w});
  }
  for (const auto& e : coupling.off_diagonal)
    out.atoms.push_back({update(model, x, e.a), update(model, y, e.b), e.mass});
  return out;
}

JointFilterMeasure product_coupling(const PointMassMeasure& mu, const PointMassMeasure& nu) {
  JointFilterMeasure out;
  out.atoms.reserve(mu.size() * nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j)
      out.atoms.push_back({mu.points[i], nu.points[j], mu.weights[i] * nu.weights[j]});
  return out;
}

JointFilterMeasure merge_pairs(const JointFilterMeasure& joint, const Vector& lambda, double tol) {
  const std::size_t n = joint.atoms.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> key(n);
  for (std::size_t k = 0; k < n; ++k) key[k] = joint.atoms[k].x(0) * lambda(0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return key[l] < key[r]; });

  std::vector<std::size_t> rep(n, n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t i = order[p];
    if (rep[i] != n) continue;
    rep[i] = i;
    for (std::size_t q = p + 1; q < n && key[order[q]] - key[i] <= tol; ++q) {
      const std::size_t j = order[q];
      if (rep[j] != n) continue;
      const auto& ai = joint.atoms[i];
      const auto& aj = joint.atoms[j];
      if (std::max(tv_distance(ai.x, aj.x, lambda), tv_distance(ai.y, aj.y, lambda)) <= tol) rep[j] = i;
    }
  }
  JointFilterMeasure out;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t r = rep[k];
    if (slot[r] == n) {
      slot[r] = out.atoms.size();
      out.atoms.push_back({joint.atoms[k].x, joint.atoms[k].y, 0.0});
    }
    out.atoms[slot[r]].weight += joint.atoms[k].weight;
  }
  return out;
}

namespace {

JointFilterMeasure advance(const HmmModel& model, const JointFilterMeasure& joint, const CoupledChainOptions& options,
                           std::size_t& expansions) {
  const std::size_t na = model.num_obs();
  expansions += joint.atoms.size() * na * na;
  if (expansions > options.budget)
    fail(ErrorCode::BudgetExceeded, "coupled chain exceeded " + std::to_string(options.budget) + " expansions");
  JointFilterMeasure next;
  for (const auto& atom : joint.atoms) {
    JointFilterMeasure one = coupled_filter_step(model, atom.x, atom.y);
    for (auto& child : one.atoms) {
      child.weight *= atom.weight;
      next.atoms.push_back(std::move(child));
    }
  }
  return merge_pairs(next, model.lambda(), options.merge_tol);
}

}  // namespace

JointFilterMeasure coupled_chain(const HmmModel& model, const PointMassMeasure& mu, const PointMassMeasure& nu,
                                 std::size_t n, const CoupledChainOptions& options) {
  JointFilterMeasure joint = merge_pairs(product_coupling(mu, nu), model.lambda(), options.merge_tol);
  std::size_t expansions = 0;
  for (std::size_t k = 0; k < n; ++k) joint = advance(model, joint, options, expansions);
  return joint;
}

EConditionReport condition_E_estimate(const HmmModel& model, const Density& pi, double rho, std::size_t n_max,
                                      const CoupledChainOptions& options, std::span<const MeasurePair> extra_pairs) {
  if (!(rho > 0.0) || rho > 2.0) fail(ErrorCode::InvalidArgument, "rho must lie in (0, 2]");
  const Vector& lambda = model.lambda();

  std::vector<MeasurePair> fixtures;
  fixtures.push_back({"extremal(delta_pi, sum_s pi(s) delta_e_s)", PointMassMeasure::dirac(pi),
                      vertex_measure(pi, lambda)});
  for (const auto& pair : extra_pairs) {
    for (const auto* m : {&pair.mu, &pair.nu})
      if (tv_distance(barycenter(*m), pi, lambda) > 1e-10)
        fail(ErrorCode::BarycenterMismatch, "fixture '" + pair.id + "' does not have barycenter pi");
    fixtures.push_back(pair);
  }

  EConditionReport report;
  report.rho = rho;
  report.n_max = n_max;
  report.note =
      "evidence only: Condition E quantifies over all measures with barycenter pi; only the listed pairs "
      "were coupled. Absence of positive mass does not show that Condition E fails.";
  for (const auto& fixture : fixtures) {
    JointFilterMeasure joint = merge_pairs(product_coupling(fixture.mu, fixture.nu), lambda, options.merge_tol);
    std::size_t expansions = 0;
    std::optional<std::size_t> first;
    for (std::size_t n = 0; n <= n_max; ++n) {
      if (n > 0) joint = advance(model, joint, options, expansions);
      EConditionRow row;
      row.fixture = fixture.id;
      row.n = n;
      row.alpha = joint.mass_within(rho, lambda);
      row.atoms = joint.atoms.size();
      if (!first && row.alpha > 0.0) first = n;
      report.rows.push_back(row);
    }
    report.first_positive.emplace_back(fixture.id, first);
  }
  return report;
}

}  // namespace hmmerg
