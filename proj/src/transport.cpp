#include "hmmerg/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hmmerg/error.hpp"

namespace hmmerg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class Cost>
void certify(TransportSolution& sol, const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
             Cost&& cost) {
  const auto n = supply.size();
  const auto m = demand.size();
  Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd col = Eigen::VectorXd::Zero(m);
  sol.primal = 0.0;
  sol.slackness_residual = 0.0;
  for (const FlowEntry& e : sol.flow) {
    const double c = cost(e.i, e.j);
    sol.primal += e.mass * c;
    row(static_cast<Eigen::Index>(e.i)) += e.mass;
    col(static_cast<Eigen::Index>(e.j)) += e.mass;
    sol.slackness_residual = std::max(
        sol.slackness_residual,
        std::abs(c - sol.u(static_cast<Eigen::Index>(e.i)) - sol.v(static_cast<Eigen::Index>(e.j))));
  }
  sol.marginal_residual = std::max((row - supply).cwiseAbs().maxCoeff(), (col - demand).cwiseAbs().maxCoeff());
  sol.dual = sol.u.dot(supply) + sol.v.dot(demand);
  sol.dual_infeasibility = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (supply(i) <= 0.0) continue;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (demand(j) <= 0.0) continue;
      sol.dual_infeasibility = std::max(
          sol.dual_infeasibility, sol.u(i) + sol.v(j) - cost(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
    }
  }
}

}  // namespace

TransportSolution solve_transport(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                                  const Eigen::MatrixXd& cost) {
  const auto n = supply.size();
  const auto m = demand.size();
  if (cost.rows() != n || cost.cols() != m)
    fail(ErrorCode::InvalidArgument, "cost matrix shape does not match the marginals");
  if (supply.minCoeff() < 0.0 || demand.minCoeff() < 0.0)
    fail(ErrorCode::InvalidArgument, "negative marginal");

  const double total = std::max(supply.sum(), demand.sum());
  const double eps = 1e-15 * std::max(1.0, total);
  const Eigen::Index nodes = n + m;

  Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(n, m);
  Eigen::VectorXd rem_a = supply;
  Eigen::VectorXd rem_b = demand;
  Eigen::VectorXd pot = Eigen::VectorXd::Zero(nodes);
  std::vector<double> dist(static_cast<std::size_t>(nodes));
  std::vector<Eigen::Index> prev(static_cast<std::size_t>(nodes));
  std::vector<char> done(static_cast<std::size_t>(nodes));

  TransportSolution sol;
  const std::size_t max_augment = 50 * static_cast<std::size_t>(nodes * nodes) + 100;

  while (true) {
    bool any_supply = false;
    for (Eigen::Index i = 0; i < n; ++i) any_supply |= rem_a(i) > eps;
    bool any_demand = false;
    for (Eigen::Index j = 0; j < m; ++j) any_demand |= rem_b(j) > eps;
    if (!any_supply || !any_demand) break;
    if (sol.augmentations++ > max_augment) fail(ErrorCode::SolverFailure, "augmentation limit reached");

    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i)
      if (rem_a(i) > eps) dist[static_cast<std::size_t>(i)] = 0.0;

    Eigen::Index target = -1;
    while (true) {
      Eigen::Index best = -1;
      double best_d = kInf;
      for (Eigen::Index v = 0; v < nodes; ++v)
        if (!done[static_cast<std::size_t>(v)] && dist[static_cast<std::size_t>(v)] < best_d) {
          best_d = dist[static_cast<std::size_t>(v)];
          best = v;
        }
      if (best < 0) break;
      done[static_cast<std::size_t>(best)] = 1;
      if (best >= n && rem_b(best - n) > eps) {
        target = best;
        break;
      }
      if (best < n) {
        for (Eigen::Index j = 0; j < m; ++j) {
          const Eigen::Index w = n + j;
          if (done[static_cast<std::size_t>(w)]) continue;
          const double rc = std::max(0.0, cost(best, j) + pot(best) - pot(w));
          if (best_d + rc < dist[static_cast<std::size_t>(w)]) {
            dist[static_cast<std::size_t>(w)] = best_d + rc;
            prev[static_cast<std::size_t>(w)] = best;
          }
        }
      } else {
        const Eigen::Index j = best - n;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (done[static_cast<std::size_t>(i)] || flow(i, j) <= eps) continue;
          const double rc = std::max(0.0, -cost(i, j) + pot(best) - pot(i));
          if (best_d + rc < dist[static_cast<std::size_t>(i)]) {
            dist[static_cast<std::size_t>(i)] = best_d + rc;
            prev[static_cast<std::size_t>(i)] = best;
          }
        }
      }
    }
    if (target < 0) fail(ErrorCode::SolverFailure, "no augmenting path to an unsatisfied demand");

    const double dt = dist[static_cast<std::size_t>(target)];
    for (Eigen::Index v = 0; v < nodes; ++v) pot(v) += std::min(dist[static_cast<std::size_t>(v)], dt);

    double delta = rem_b(target - n);
    Eigen::Index v = target;
    while (prev[static_cast<std::size_t>(v)] >= 0) {
      const Eigen::Index u = prev[static_cast<std::size_t>(v)];
      if (u >= n) delta = std::min(delta, flow(v, u - n));  // reverse arc sink u -> source v
      v = u;
    }
    delta = std::min(delta, rem_a(v));

    rem_a(v) -= delta;
    rem_b(target - n) -= delta;
    v = target;
    while (prev[static_cast<std::size_t>(v)] >= 0) {
      const Eigen::Index u = prev[static_cast<std::size_t>(v)];
      if (u < n) {
        flow(u, v - n) += delta;
      } else {
        flow(v, u - n) -= delta;
        if (flow(v, u - n) < eps) flow(v, u - n) = 0.0;
      }
      v = u;
    }
  }

  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (flow(i, j) > 0.0)
        sol.flow.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), flow(i, j)});
  sol.u = -pot.head(n);
  sol.v = pot.tail(m);
  certify(sol, supply, demand, [&](std::size_t i, std::size_t j) {
    return cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  });
  return sol;
}

TransportSolution solve_transport_1d(const Eigen::VectorXd& supply, const Eigen::VectorXd& positions_supply,
                                     const Eigen::VectorXd& demand, const Eigen::VectorXd& positions_demand,
                                     double scale) {
  const auto n = static_cast<std::size_t>(supply.size());
  const auto m = static_cast<std::size_t>(demand.size());
  std::vector<std::size_t> order_a(n), order_b(m);
  std::iota(order_a.begin(), order_a.end(), 0);
  std::iota(order_b.begin(), order_b.end(), 0);
  auto by = [](const Eigen::VectorXd& pos) {
    return [&pos](std::size_t l, std::size_t r) {
      return pos(static_cast<Eigen::Index>(l)) < pos(static_cast<Eigen::Index>(r));
    };
  };
  std::stable_sort(order_a.begin(), order_a.end(), by(positions_supply));
  std::stable_sort(order_b.begin(), order_b.end(), by(positions_demand));

  const double eps = 1e-15 * std::max(1.0, supply.sum());
  TransportSolution sol;
  {
    std::size_t ia = 0, ib = 0;
    double ra = n ? supply(static_cast<Eigen::Index>(order_a[0])) : 0.0;
    double rb = m ? demand(static_cast<Eigen::Index>(order_b[0])) : 0.0;
    while (ia < n && ib < m) {
      const double move = std::min(ra, rb);
      if (move > 0.0) sol.flow.push_back({order_a[ia], order_b[ib], move});
      ra -= move;
      rb -= move;
      if (ra <= eps && ++ia < n) ra = supply(static_cast<Eigen::Index>(order_a[ia]));
      if (rb <= eps && ++ib < m) rb = demand(static_cast<Eigen::Index>(order_b[ib]));
      if (ra <= eps && ia >= n) break;
    }
  }

  // Potential f with f' = -scale * sign(F_supply - F_demand).
  struct Event {
    double pos;
    double da;
    double db;
  };
  std::vector<Event> events;
  events.reserve(n + m);
  for (std::size_t i = 0; i < n; ++i)
    events.push_back({positions_supply(static_cast<Eigen::Index>(i)), supply(static_cast<Eigen::Index>(i)), 0.0});
  for (std::size_t j = 0; j < m; ++j)
    events.push_back({positions_demand(static_cast<Eigen::Index>(j)), 0.0, demand(static_cast<Eigen::Index>(j))});
  std::sort(events.begin(), events.end(), [](const Event& l, const Event& r) { return l.pos < r.pos; });

  std::vector<double> knots;
  std::vector<double> values;
  double fa = 0.0, fb = 0.0, f = 0.0;
  for (std::size_t k = 0; k < events.size();) {
    const double pos = events[k].pos;
    if (!knots.empty()) {
      const double gap = fa - fb;
      const double sign = std::abs(gap) <= eps ? 0.0 : (gap > 0.0 ? 1.0 : -1.0);
      f -= scale * sign * (pos - knots.back());
    }
    knots.push_back(pos);
    values.push_back(f);
    while (k < events.size() && events[k].pos == pos) {
      fa += events[k].da;
      fb += events[k].db;
      ++k;
    }
  }
  auto potential = [&](double pos) {
    const auto it = std::lower_bound(knots.begin(), knots.end(), pos);
    return values[static_cast<std::size_t>(it - knots.begin())];
  };
  sol.u.resize(supply.size());
  sol.v.resize(demand.size());
  for (std::size_t i = 0; i < n; ++i)
    sol.u(static_cast<Eigen::Index>(i)) = potential(positions_supply(static_cast<Eigen::Index>(i)));
  for (std::size_t j = 0; j < m; ++j)
    sol.v(static_cast<Eigen::Index>(j)) = -potential(positions_demand(static_cast<Eigen::Index>(j)));

  certify(sol, supply, demand, [&](std::size_t i, std::size_t j) {
    return scale * std::abs(positions_supply(static_cast<Eigen::Index>(i)) -
                            positions_demand(static_cast<Eigen::Index>(j)));
  });
  return sol;
}

}  // namespace hmmerg
