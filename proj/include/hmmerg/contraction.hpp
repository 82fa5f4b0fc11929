#pragma once

// Hopf/Birkhoff contraction certificates for kernels with rectangular support
// and the checkers for subrectangularity (A), rank-1 closure (KR), block
// positivity (P) and the derived N-step constants (E1).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hmmerg/model.hpp"

namespace hmmerg {

using Subset = std::vector<std::size_t>;

struct RectSupport {
  Subset rows;  // F
  Subset cols;  // G
};

// The positive set of `kernel` if it is exactly rows x cols. Entries in
// [-zero_tol, 0] count as zero; entries in (0, zero_tol] raise
// HypothesisViolated.
std::optional<RectSupport> rectangular_support(const Matrix& kernel, double zero_tol = 0.0);

struct SubrectangularCheck {
  bool value = false;
  bool zero = false;  // vacuously true for the zero matrix
  explicit operator bool() const noexcept { return value; }
};

// (M)_{i1 j1} (M)_{i2 j2} > 0  =>  (M)_{i1 j2} (M)_{i2 j1} > 0
SubrectangularCheck is_subrectangular(const Matrix& matrix, double zero_tol = 0.0);

struct ConditionAResult {
  std::optional<std::vector<std::size_t>> witness;  // shortest, lexicographically first
  std::size_t products_examined = 0;
  bool inconclusive = false;
};

ConditionAResult check_condition_A(const HmmModel& model, std::size_t max_len, std::size_t budget = 10'000'000,
                                   double zero_tol = 0.0);

struct KrReport {
  std::vector<std::size_t> sequence;
  std::vector<double> ratios;  // sigma_2 / sigma_1 of the n-fold product, n = 1..
  std::optional<double> fitted_rate;
  bool rank_one_approach = false;
  std::string verdict;
};

// Ratios along an explicit product of matrices.
KrReport check_condition_KR(std::span<const Matrix> factors, double tol = 1e-8);
// Along an explicit observation sequence of a model.
KrReport check_condition_KR(const HmmModel& model, std::span<const std::size_t> sequence, double tol = 1e-8);
// Greedy search: each step appends the observation minimizing the ratio.
KrReport check_condition_KR_search(const HmmModel& model, std::size_t depth, double tol = 1e-8);

// sqrt of the largest cross ratio k(s1,t1)k(s2,t2) / (k(s2,t1)k(s1,t2)) on F x G.
double cross_ratio_kappa(const Matrix& kernel, const Subset& rows, const Subset& cols);
double cross_ratio_kappa_exhaustive(const Matrix& kernel, const Subset& rows, const Subset& cols);
double cross_ratio_kappa_reduced(const Matrix& kernel, const Subset& rows, const Subset& cols);

// 2 prod (kappa_m - 1)/(kappa_m + 1)
double hopf_bound(std::span<const double> kappas);

struct HopfCheck {
  double achieved = 0.0;
  double bound = 0.0;
  std::vector<double> kappas;
  std::vector<RectSupport> supports;
  bool holds = false;
};

// Density kernels k_1..k_n acting as xK(t) = sum_s x(s) lambda(s) k(s,t).
HopfCheck verify_hopf(std::span<const Matrix> kernels, const Vector& lambda, const Density& x, const Density& y,
                      double zero_tol = 0.0);

struct OscStep {
  double lhs = 0.0;  // osc_F(v1/u1)
  double rhs = 0.0;  // (kappa-1)/(kappa+1) osc_G(v/u)
  double kappa = 1.0;
  bool holds = false;
};

OscStep birkhoff_osc_step(const Matrix& kernel, const Vector& lambda, const Vector& u, const Vector& v,
                          const Subset& rows, const Subset& cols);

struct PCertificate {
  Subset f0;
  Subset b0;
  double d0 = 0.0;
  double big_d0 = 0.0;
  double beta0 = 0.0;
  std::vector<std::pair<std::size_t, Subset>> f1;  // a -> F1(a)
};

struct PViolation {
  std::string clause;  // "1", "2", "3a", "3b", "3c"
  std::string detail;
  std::optional<std::size_t> obs;
  std::optional<std::size_t> row;
  std::optional<std::size_t> col;
};

using PCheck = std::variant<PCertificate, PViolation>;

PCheck check_condition_P(const HmmModel& model, const Density& pi, const Subset& f0, const Subset& b0);

struct E1Certificate {
  double rho = 0.0;
  std::size_t n = 0;
  double kappa = 1.0;
  Subset f0;
  double k0_threshold = 0.0;  // x in K0 iff x(F0) >= threshold
  double xi = 0.0;
  double beta = 0.0;
  double eta = 0.0;

  double alpha() const { return xi * xi * beta * eta; }
};

struct E1VerifyOptions {
  std::size_t pairs = 1000;
  std::size_t exhaustive_limit = 10'000;  // enumerate B0^N when |B0|^N is at most this
  std::size_t sampled_sequences = 1000;
  std::uint64_t seed = 1;
};

struct E1Verification {
  std::size_t pairs = 0;
  std::size_t sequences = 0;
  bool exhaustive_sequences = false;
  std::size_t likelihood_counterexamples = 0;
  std::size_t contraction_counterexamples = 0;
  double min_likelihood = 0.0;
  double max_distance = 0.0;
  std::string first_counterexample;

  bool passed() const { return likelihood_counterexamples == 0 && contraction_counterexamples == 0; }
};

struct E1Result {
  E1Certificate certificate;
  E1Verification verification;
};

// Integer N = min{n : 2((kappa-1)/(kappa+1))^n < rho}.
std::size_t e1_horizon(double kappa, double rho);

E1Result e1_constants(const HmmModel& model, const Density& pi, const PCertificate& cert, double rho,
                      const E1VerifyOptions& options = {});

}  // namespace hmmerg
