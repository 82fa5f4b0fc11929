#pragma once

// Total-variation geometry of K and finitely supported measures on K.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hmmerg/model.hpp"

namespace hmmerg {

// Finitely supported measure sum_k w_k delta_{x_k} on K. Total weight r need
// not be 1.
struct PointMassMeasure {
  std::vector<Density> points;
  std::vector<double> weights;

  static PointMassMeasure dirac(Density x, double weight = 1.0);

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  double total_mass() const;
  void add(Density x, double w);
};

// A function on K with a declared Lipschitz constant w.r.t. delta_TV and a
// declared sup-norm.
struct LipschitzFunction {
  std::string name;
  std::function<double(const Density&)> eval;
  double gamma = 1.0;
  double sup_norm = 1.0;

  double operator()(const Density& x) const { return eval(x); }
};

double tv_distance(const Density& x, const Density& y, const Vector& lambda);
// x(F) = sum_{s in F} x(s) lambda(s)
double subset_mass(const Density& x, std::span<const std::size_t> subset, const Vector& lambda);

Density barycenter(const PointMassMeasure& mu);
double integrate(const LipschitzFunction& u, const PointMassMeasure& mu);

// Merge atoms whose points lie within tol in TV. Merged atoms keep the point
// of their lowest-index member and appear in first-occurrence order.
PointMassMeasure merge_atoms(const PointMassMeasure& mu, const Vector& lambda, double tol = 1e-12);
// Same grouping, returning for each input atom the index of its output atom.
std::vector<std::size_t> merge_groups(std::span<const Density> points, const Vector& lambda,
                                      double tol, std::size_t& group_count);

struct TransportEntry {
  std::size_t i;
  std::size_t j;
  double mass;
  double cost;
};

struct TransportPlan {
  std::vector<TransportEntry> entries;
  double objective = 0.0;
};

struct TransportCertificate {
  double marginal_residual = 0.0;
  double slackness_residual = 0.0;
  double dual_infeasibility = 0.0;
  double duality_gap = 0.0;

  bool ok(double tol = 1e-9) const {
    return marginal_residual < 1e-10 && slackness_residual < tol && dual_infeasibility < tol &&
           duality_gap < tol;
  }
};

struct KantorovichResult {
  double distance = 0.0;
  TransportPlan plan;
  TransportCertificate certificate;
  std::string method;
};

// Exact Kantorovich distance with ground cost delta_TV. Atom points must lie
// in K; equal total mass is required.
KantorovichResult kantorovich(const PointMassMeasure& mu, const PointMassMeasure& nu, const Vector& lambda);

// Objective of an arbitrary coupling given as (i, j, mass) entries.
double coupling_cost(const PointMassMeasure& mu, const PointMassMeasure& nu,
                     std::span<const TransportEntry> entries, const Vector& lambda);

// max over samples of <u,mu> - <u,nu>; samples are assumed Lip_1.
double kantorovich_dual_check(const PointMassMeasure& mu, const PointMassMeasure& nu,
                              std::span<const LipschitzFunction> u_samples);

// u(z) = <I_{F1} - I_{F2}, z> for the sign split F1 = {a >= b}.
LipschitzFunction hahn_witness(const Density& a, const Density& b, const Vector& lambda);

double barycenter_lower_bound(const PointMassMeasure& mu, const PointMassMeasure& nu, const Vector& lambda);

// Moves the atoms of phi so that the barycenter becomes b while the total
// displacement sum_k beta_k ||xi_k - zeta_k|| equals ||a - b||.
PointMassMeasure barycenter_match(const PointMassMeasure& phi, const Density& b, const Vector& lambda);

struct NearestBarycenterResult {
  PointMassMeasure psi;
  double achieved = 0.0;     // exact d_K(mu, psi)
  double lower_bound = 0.0;  // r ||x - y||
  double match_cost = 0.0;   // sum_k beta_k ||xi_k - zeta_k||
};

NearestBarycenterResult nearest_barycenter_distance(const PointMassMeasure& mu, const Density& y,
                                                    const Vector& lambda);

struct HalfMassResult {
  double mass = 0.0;
  double bound = 0.0;
  bool holds = false;
};

HalfMassResult half_mass_check(const PointMassMeasure& mu, const Density& pi,
                               std::span<const std::size_t> subset, const Vector& lambda);

// sum_s pi(s) lambda(s) delta_{e_s}: the measure on vertices with barycenter pi.
PointMassMeasure vertex_measure(const Density& pi, const Vector& lambda);

}  // namespace hmmerg
