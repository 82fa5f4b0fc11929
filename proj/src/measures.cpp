#include "hmmerg/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hmmerg/transport.hpp"

namespace hmmerg {

PointMassMeasure PointMassMeasure::dirac(Density x, double weight) {
  PointMassMeasure mu;
  mu.add(std::move(x), weight);
  return mu;
}

double PointMassMeasure::total_mass() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

void PointMassMeasure::add(Density x, double w) {
  points.push_back(std::move(x));
  weights.push_back(w);
}

double tv_distance(const Density& x, const Density& y, const Vector& lambda) {
  if (x.size() != y.size() || x.size() != lambda.size())
    fail(ErrorCode::SpaceMismatch, "densities over different state spaces");
  return ((x - y).cwiseAbs()).dot(lambda);
}

double subset_mass(const Density& x, std::span<const std::size_t> subset, const Vector& lambda) {
  double total = 0.0;
  for (std::size_t s : subset) {
    const auto i = static_cast<Eigen::Index>(s);
    total += x(i) * lambda(i);
  }
  return total;
}

Density barycenter(const PointMassMeasure& mu) {
  if (mu.empty()) fail(ErrorCode::InvalidArgument, "barycenter of an empty measure");
  Density b = Density::Zero(mu.points.front().size());
  for (std::size_t k = 0; k < mu.size(); ++k) b += mu.weights[k] * mu.points[k];
  return b;
}

double integrate(const LipschitzFunction& u, const PointMassMeasure& mu) {
  double total = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) total += mu.weights[k] * u(mu.points[k]);
  return total;
}

std::vector<std::size_t> merge_groups(std::span<const Density> points, const Vector& lambda, double tol,
                                      std::size_t& group_count) {
  const std::size_t n = points.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> key(n);
  for (std::size_t k = 0; k < n; ++k) key[k] = points[k](0) * lambda(0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return key[l] < key[r]; });

  // Representative (lowest original index) for each atom.
  std::vector<std::size_t> rep(n, n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t i = order[p];
    if (rep[i] != n) continue;
    rep[i] = i;
    for (std::size_t q = p + 1; q < n && key[order[q]] - key[i] <= tol; ++q) {
      const std::size_t j = order[q];
      if (rep[j] == n && tv_distance(points[i], points[j], lambda) <= tol) rep[j] = i;
    }
  }
  // The representative found while scanning is not always the lowest index;
  // renumber groups by first occurrence.
  std::vector<std::size_t> low(n, n);
  for (std::size_t k = 0; k < n; ++k) low[rep[k]] = std::min(low[rep[k]], k);
  std::vector<std::size_t> group_of_low(n, n);
  std::vector<std::size_t> out(n);
  group_count = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t l = low[rep[k]];
    if (group_of_low[l] == n) group_of_low[l] = group_count++;
    out[k] = group_of_low[l];
  }
  return out;
}

PointMassMeasure merge_atoms(const PointMassMeasure& mu, const Vector& lambda, double tol) {
  std::size_t groups = 0;
  const auto group = merge_groups(mu.points, lambda, tol, groups);
  PointMassMeasure out;
  out.points.resize(groups);
  out.weights.assign(groups, 0.0);
  std::vector<char> seen(groups, 0);
  for (std::size_t k = 0; k < mu.size(); ++k) {
    const std::size_t g = group[k];
    if (!seen[g]) {
      out.points[g] = mu.points[k];
      seen[g] = 1;
    }
    out.weights[g] += mu.weights[k];
  }
  return out;
}

namespace {

void check_same_mass(const PointMassMeasure& mu, const PointMassMeasure& nu) {
  const double rm = mu.total_mass();
  const double rn = nu.total_mass();
  if (std::abs(rm - rn) > 1e-10 * std::max(1.0, std::abs(rm)))
    fail(ErrorCode::MassMismatch, "total masses " + std::to_string(rm) + " and " + std::to_string(rn));
}

bool all_unit_mass(const PointMassMeasure& mu, const Vector& lambda) {
  return std::all_of(mu.points.begin(), mu.points.end(),
                     [&](const Density& x) { return std::abs(total_mass(x, lambda) - 1.0) < 1e-9; });
}

Eigen::VectorXd as_vector(const std::vector<double>& w) {
  return Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
}

}  // namespace

KantorovichResult kantorovich(const PointMassMeasure& mu, const PointMassMeasure& nu, const Vector& lambda) {
  if (mu.empty() || nu.empty()) fail(ErrorCode::InvalidArgument, "empty measure");
  check_same_mass(mu, nu);
  for (const auto* m : {&mu, &nu})
    for (std::size_t k = 0; k < m->size(); ++k) {
      if (m->points[k].size() != lambda.size()) fail(ErrorCode::SpaceMismatch, "atom dimension");
      if (m->weights[k] < 0.0) fail(ErrorCode::InvalidArgument, "negative atom weight");
    }

  Eigen::VectorXd supply = as_vector(mu.weights);
  Eigen::VectorXd demand = as_vector(nu.weights);
  // Remove the rounding difference in totals so the solver sees a balanced problem.
  demand *= supply.sum() / demand.sum();

  KantorovichResult out;
  TransportSolution sol;
  if (lambda.size() == 2 && all_unit_mass(mu, lambda) && all_unit_mass(nu, lambda)) {
    // On the 2-cell simplex delta_TV(x,y) = 2 |x(1) - y(1)|.
    Eigen::VectorXd pa(static_cast<Eigen::Index>(mu.size())), pb(static_cast<Eigen::Index>(nu.size()));
    for (std::size_t k = 0; k < mu.size(); ++k) pa(static_cast<Eigen::Index>(k)) = mu.points[k](0) * lambda(0);
    for (std::size_t k = 0; k < nu.size(); ++k) pb(static_cast<Eigen::Index>(k)) = nu.points[k](0) * lambda(0);
    sol = solve_transport_1d(supply, pa, demand, pb, 2.0);
    out.method = "monotone-1d";
  } else {
    Eigen::MatrixXd cost(static_cast<Eigen::Index>(mu.size()), static_cast<Eigen::Index>(nu.size()));
    for (std::size_t i = 0; i < mu.size(); ++i)
      for (std::size_t j = 0; j < nu.size(); ++j)
        cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            tv_distance(mu.points[i], nu.points[j], lambda);
    sol = solve_transport(supply, demand, cost);
    out.method = "min-cost-flow";
  }

  out.plan.entries.reserve(sol.flow.size());
  for (const FlowEntry& e : sol.flow) {
    const double c = tv_distance(mu.points[e.i], nu.points[e.j], lambda);
    out.plan.entries.push_back({e.i, e.j, e.mass, c});
    out.plan.objective += e.mass * c;
  }
  out.distance = std::max(0.0, out.plan.objective);  // round-off below zero
  out.certificate.marginal_residual = sol.marginal_residual;
  out.certificate.slackness_residual = sol.slackness_residual;
  out.certificate.dual_infeasibility = sol.dual_infeasibility;
  out.certificate.duality_gap = std::abs(sol.primal - sol.dual);
  if (!out.certificate.ok())
    fail(ErrorCode::SolverFailure, "optimality certificate failed (slackness " +
                                       std::to_string(out.certificate.slackness_residual) + ", gap " +
                                       std::to_string(out.certificate.duality_gap) + ")");
  return out;
}

double coupling_cost(const PointMassMeasure& mu, const PointMassMeasure& nu,
                     std::span<const TransportEntry> entries, const Vector& lambda) {
  double total = 0.0;
  for (const auto& e : entries) total += e.mass * tv_distance(mu.points.at(e.i), nu.points.at(e.j), lambda);
  return total;
}

double kantorovich_dual_check(const PointMassMeasure& mu, const PointMassMeasure& nu,
                              std::span<const LipschitzFunction> u_samples) {
  double best = 0.0;
  for (const auto& u : u_samples) best = std::max(best, integrate(u, mu) - integrate(u, nu));
  return best;
}

LipschitzFunction hahn_witness(const Density& a, const Density& b, const Vector& lambda) {
  Vector j(a.size());
  for (Eigen::Index s = 0; s < a.size(); ++s) j(s) = a(s) >= b(s) ? lambda(s) : -lambda(s);
  LipschitzFunction u;
  u.name = "hahn-split";
  u.gamma = 1.0;
  u.sup_norm = 1.0;
  u.eval = [j](const Density& z) { return j.dot(z); };
  return u;
}

double barycenter_lower_bound(const PointMassMeasure& mu, const PointMassMeasure& nu, const Vector& lambda) {
  check_same_mass(mu, nu);
  return tv_distance(barycenter(mu), barycenter(nu), lambda);
}

PointMassMeasure barycenter_match(const PointMassMeasure& phi, const Density& b, const Vector& lambda) {
  if (phi.empty()) fail(ErrorCode::InvalidArgument, "empty measure");
  if (b.size() != lambda.size()) fail(ErrorCode::SpaceMismatch, "target dimension");
  if (b.minCoeff() < -1e-14) fail(ErrorCode::NegativeTarget, "target density has negative entries");
  for (double w : phi.weights)
    if (!(w > 0.0)) fail(ErrorCode::InvalidArgument, "atom weights must be positive");
  const Density a = barycenter(phi);
  const double ma = total_mass(a, lambda);
  const double mb = total_mass(b, lambda);
  if (std::abs(ma - mb) > 1e-10 * std::max(1.0, ma))
    fail(ErrorCode::MassMismatch, "||b|| = " + std::to_string(mb) + " but ||a|| = " + std::to_string(ma));

  const std::size_t n = phi.size();
  PointMassMeasure psi = phi;
  Density target = b.cwiseMax(0.0);
  Density a_cur = a;
  const double tiny = 1e-15 * std::max(1.0, ma);

  for (std::size_t count = n; count >= 1; --count) {
    const std::size_t k = count - 1;
    const double beta = phi.weights[k];
    const Density& xi = phi.points[k];
    if (count == 1) {
      psi.points[k] = (target / beta).cwiseMax(0.0);
      break;
    }
    const Density diff = a_cur - target;
    const double delta = diff.cwiseAbs().dot(lambda) / 2.0;
    if (delta <= tiny) break;  // remaining atoms stay where they are

    const Density a_rest = a_cur - beta * xi;
    Density zeta = xi;
    Density c = Density::Zero(a.size());
    for (Eigen::Index s = 0; s < a.size(); ++s)
      if (a_cur(s) >= target(s)) c(s) = std::min(a_cur(s) - a_rest(s), a_cur(s) - target(s));
    const double delta0 = c.dot(lambda);
    for (Eigen::Index s = 0; s < a.size(); ++s) {
      if (a_cur(s) >= target(s))
        zeta(s) = xi(s) - c(s) / beta;
      else
        zeta(s) = xi(s) + (delta0 / delta) * (target(s) - a_cur(s)) / beta;
    }
    zeta = zeta.cwiseMax(0.0);
    psi.points[k] = zeta;
    target = (target - beta * zeta).cwiseMax(0.0);
    a_cur = a_rest;
  }
  return psi;
}

NearestBarycenterResult nearest_barycenter_distance(const PointMassMeasure& mu, const Density& y,
                                                    const Vector& lambda) {
  const double r = mu.total_mass();
  const Density bar = barycenter(mu);
  NearestBarycenterResult out;
  out.psi = barycenter_match(mu, r * y, lambda);
  out.lower_bound = tv_distance(bar, r * y, lambda);
  for (std::size_t k = 0; k < mu.size(); ++k)
    out.match_cost += mu.weights[k] * tv_distance(mu.points[k], out.psi.points[k], lambda);
  out.achieved = kantorovich(mu, out.psi, lambda).distance;
  return out;
}

HalfMassResult half_mass_check(const PointMassMeasure& mu, const Density& pi,
                               std::span<const std::size_t> subset, const Vector& lambda) {
  if (tv_distance(barycenter(mu), pi, lambda) > 1e-10)
    fail(ErrorCode::BarycenterMismatch, "measure barycenter differs from pi");
  HalfMassResult out;
  const double pf = subset_mass(pi, subset, lambda);
  out.bound = pf / 2.0;
  for (std::size_t k = 0; k < mu.size(); ++k)
    if (subset_mass(mu.points[k], subset, lambda) >= out.bound - 1e-15) out.mass += mu.weights[k];
  out.holds = out.mass >= out.bound - 1e-12;
  return out;
}

PointMassMeasure vertex_measure(const Density& pi, const Vector& lambda) {
  PointMassMeasure mu;
  for (Eigen::Index s = 0; s < pi.size(); ++s) {
    const double w = pi(s) * lambda(s);
    if (w > 0.0) mu.add(vertex(static_cast<std::size_t>(s), lambda), w);
  }
  return mu;
}

}  // namespace hmmerg
