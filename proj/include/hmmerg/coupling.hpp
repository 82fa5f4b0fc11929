#pragma once

// Vasershtein (maximal-diagonal) coupling of observation laws, the induced
// coupling of the filter kernel, and Condition-E evidence.

#include <optional>
#include <string>
#include <vector>

#include "hmmerg/filter.hpp"
#include "hmmerg/measures.hpp"

namespace hmmerg {

struct OffDiagonalMass {
  std::size_t a;
  std::size_t b;
  double mass;
};

// Joint law of (a, b) with marginals G(x,.) and G(y,.) (masses include tau).
struct ObsCoupling {
  Vector diagonal;  // mass on (a, a)
  std::vector<OffDiagonalMass> off_diagonal;
  double excess = 0.0;  // total mass not on the diagonal

  double diagonal_mass() const { return diagonal.sum(); }
  Vector row_marginal() const;
  Vector col_marginal() const;
};

ObsCoupling vasershtein_obs_coupling(const HmmModel& model, const Density& x, const Density& y);

struct PairAtom {
  Density x;
  Density y;
  double weight = 0.0;
};

struct JointFilterMeasure {
  std::vector<PairAtom> atoms;

  double total_mass() const;
  PointMassMeasure first_marginal() const;
  PointMassMeasure second_marginal() const;
  // Mass on D_rho = {(z1, z2) : delta_TV(z1, z2) < rho}.
  double mass_within(double rho, const Vector& lambda) const;
};

JointFilterMeasure coupled_filter_step(const HmmModel& model, const Density& x, const Density& y);

struct CoupledChainOptions {
  std::size_t budget = 10'000'000;  // pair-atom expansions over the whole run
  double merge_tol = 1e-12;
};

JointFilterMeasure product_coupling(const PointMassMeasure& mu, const PointMassMeasure& nu);

// mu (x) nu pushed N times through the coupled filter step.
JointFilterMeasure coupled_chain(const HmmModel& model, const PointMassMeasure& mu, const PointMassMeasure& nu,
                                 std::size_t n, const CoupledChainOptions& options = {});

// Merge pair atoms whose coordinates both lie within tol in TV.
JointFilterMeasure merge_pairs(const JointFilterMeasure& joint, const Vector& lambda, double tol);

struct MeasurePair {
  std::string id;
  PointMassMeasure mu;
  PointMassMeasure nu;
};

struct EConditionRow {
  std::string fixture;
  std::size_t n = 0;
  double alpha = 0.0;  // coupled mass on D_rho
  std::size_t atoms = 0;
};

struct EConditionReport {
  double rho = 0.0;
  std::size_t n_max = 0;
  std::vector<EConditionRow> rows;
  // Per fixture: smallest N with alpha > 0, and that alpha.
  std::vector<std::pair<std::string, std::optional<std::size_t>>> first_positive;
  std::string note;
};

// Evidence for Condition E on (delta_pi, sum_s pi(s) delta_{e_s}) plus extra
// user pairs, each of which must have barycenter pi.
EConditionReport condition_E_estimate(const HmmModel& model, const Density& pi, double rho, std::size_t n_max,
                                      const CoupledChainOptions& options = {},
                                      std::span<const MeasurePair> extra_pairs = {});

}  // namespace hmmerg
