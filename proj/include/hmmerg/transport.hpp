#pragma once

// Exact discrete transport (Hitchcock problem) by successive shortest paths
// with Johnson potentials. Dense, intended for supports up to a few hundred
// atoms. The returned potentials form a dual certificate.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace hmmerg {

struct FlowEntry {
  std::size_t i;
  std::size_t j;
  double mass;
};

struct TransportSolution {
  std::vector<FlowEntry> flow;
  Eigen::VectorXd u;  // dual variable per supply node
  Eigen::VectorXd v;  // dual variable per demand node
  double primal = 0.0;
  double dual = 0.0;
  double slackness_residual = 0.0;  // max |c_ij - u_i - v_j| over flow > 0
  double dual_infeasibility = 0.0;  // max (u_i + v_j - c_ij)_+
  double marginal_residual = 0.0;
  std::size_t augmentations = 0;
};

// supply and demand must be nonnegative with equal totals (checked by the
// caller); cost is supply.size() x demand.size() and nonnegative.
TransportSolution solve_transport(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                                  const Eigen::MatrixXd& cost);

// Monotone coupling on the line with cost scale * |p_i - q_j|. Duals are the
// integrated CDF-sign potential.
TransportSolution solve_transport_1d(const Eigen::VectorXd& supply, const Eigen::VectorXd& positions_supply,
                                     const Eigen::VectorXd& demand, const Eigen::VectorXd& positions_demand,
                                     double scale);

}  // namespace hmmerg
