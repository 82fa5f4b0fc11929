#include <doctest.h>

#include <cmath>
#include <random>

#include "hmmerg/contraction.hpp"
#include "hmmerg/lab.hpp"
#include "support.hpp"

using namespace hmmerg;
using testing::mat;
using testing::vec;

namespace {

const Matrix kTwoOne = mat({{2, 1}, {1, 2}});
const Vector kCounting2 = vec({1, 1});

}  // namespace

TEST_CASE("rectangular supports") {
  const auto full = rectangular_support(kTwoOne);
  REQUIRE(full);
  CHECK(full->rows == Subset{0, 1});
  CHECK(full->cols == Subset{0, 1});
  CHECK_FALSE(rectangular_support(Matrix::Identity(2, 2)));
  const auto column = rectangular_support(mat({{0.7, 0}, {0.3, 0}}));
  REQUIRE(column);
  CHECK(column->rows == Subset{0, 1});
  CHECK(column->cols == Subset{0});

  CHECK_THROWS_AS(rectangular_support(mat({{1, -0.1}, {1, 1}})), Error);
  // Tiny entries count as zero only below the tolerance.
  CHECK(rectangular_support(mat({{1, -1e-15}, {1, 0}}), 1e-12));
  CHECK_THROWS_AS(rectangular_support(mat({{1, 1e-13}, {1, 0}}), 1e-12), Error);
}

TEST_CASE("subrectangular matrices") {
  CHECK_FALSE(is_subrectangular(Matrix::Identity(2, 2)).value);
  CHECK(is_subrectangular(kTwoOne).value);
  CHECK(is_subrectangular(mat({{0.7, 0}, {0.3, 0}})).value);
  const auto zero = is_subrectangular(Matrix::Zero(2, 3));
  CHECK(zero.value);
  CHECK(zero.zero);

  // Agreement with the quadruple implication evaluated directly.
  std::mt19937_64 rng(5);
  std::bernoulli_distribution coin(0.6);
  for (int trial = 0; trial < 300; ++trial) {
    Matrix m(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = coin(rng) ? 1.0 : 0.0;
    bool direct = true;
    for (int i1 = 0; i1 < 3; ++i1)
      for (int j1 = 0; j1 < 3; ++j1)
        for (int i2 = 0; i2 < 3; ++i2)
          for (int j2 = 0; j2 < 3; ++j2)
            if (m(i1, j1) * m(i2, j2) > 0 && !(m(i1, j2) * m(i2, j1) > 0)) direct = false;
    CHECK(is_subrectangular(m).value == direct);
    CHECK(rectangular_support(m).has_value() == (direct && m.sum() > 0));
  }
}

TEST_CASE("Condition A") {
  const auto part = check_condition_A(two_state_partition(), 3);
  REQUIRE(part.witness);
  CHECK(part.witness->size() == 1);
  const auto m2 = check_condition_A(m2_model(), 3);
  REQUIRE(m2.witness);
  CHECK(*m2.witness == std::vector<std::size_t>{0});

  const auto periodic = check_condition_A(periodic_two_cycle(), 3);
  CHECK_FALSE(periodic.witness);
  CHECK(periodic.inconclusive);
  CHECK(periodic.products_examined == 3);
  CHECK_THROWS_AS(check_condition_A(periodic_two_cycle(), 5, 2), Error);
}

TEST_CASE("Condition KR") {
  const HmmModel part = two_state_partition();
  const std::vector<std::size_t> ones(6, 0);
  const auto col = check_condition_KR(part, ones);
  for (double r : col.ratios) CHECK(r < 1e-15);
  CHECK(col.rank_one_approach);

  const std::vector<Matrix> powers(12, kTwoOne);
  const auto decay = check_condition_KR(powers);
  for (std::size_t n = 1; n < 8; ++n) CHECK(decay.ratios[n] / decay.ratios[n - 1] == doctest::Approx(1.0 / 3.0));
  REQUIRE(decay.fitted_rate);
  CHECK(*decay.fitted_rate == doctest::Approx(1.0 / 3.0).epsilon(1e-3));

  const std::vector<Matrix> ids(6, Matrix::Identity(2, 2));
  const auto flat = check_condition_KR(ids);
  for (double r : flat.ratios) CHECK(r == doctest::Approx(1.0));
  CHECK_FALSE(flat.rank_one_approach);

  const auto search = check_condition_KR_search(m2_model(), 16);
  CHECK(search.sequence.size() == 16);
  CHECK(search.rank_one_approach);
  CHECK_THROWS_AS(check_condition_KR(std::vector<Matrix>{}), Error);
}

TEST_CASE("cross ratios") {
  const Subset both{0, 1};
  const Vector u = vec({1, 2, 3}), v = vec({0.5, 4});
  CHECK(cross_ratio_kappa(u * v.transpose(), {0, 1, 2}, both) == doctest::Approx(1.0));
  CHECK(cross_ratio_kappa(kTwoOne, both, both) == doctest::Approx(2.0));
  CHECK(cross_ratio_kappa(mat({{0.1, 0.1}, {0.1, 0.4}}), both, both) == doctest::Approx(2.0));
  CHECK_THROWS_AS(cross_ratio_kappa(Matrix::Identity(2, 2), both, both), Error);

  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix k = testing::positive_matrix(rng, 5, 4);
    const Subset rows{0, 1, 2, 3, 4}, cols{0, 1, 2, 3};
    CHECK(cross_ratio_kappa_reduced(k, rows, cols) == doctest::Approx(cross_ratio_kappa_exhaustive(k, rows, cols)));
  }
}

TEST_CASE("Hopf bound") {
  CHECK(hopf_bound(std::vector<double>{1.0, 1.0}) == 0.0);
  CHECK(hopf_bound(std::vector<double>{2.0}) == doctest::Approx(2.0 / 3.0));
  CHECK(hopf_bound(std::vector<double>{2.0, 2.0}) == doctest::Approx(2.0 / 9.0));
  CHECK_THROWS_AS(hopf_bound(std::vector<double>{0.5}), Error);
}

TEST_CASE("Hopf verification") {
  const std::vector<Matrix> one{kTwoOne};
  const auto tight = verify_hopf(one, kCounting2, vec({1, 0}), vec({0, 1}));
  CHECK(std::abs(tight.achieved - 2.0 / 3.0) < 1e-12);
  CHECK(std::abs(tight.bound - 2.0 / 3.0) < 1e-12);
  CHECK(tight.holds);

  const auto same = verify_hopf(one, kCounting2, vec({0.3, 0.7}), vec({0.3, 0.7}));
  CHECK(same.achieved == 0.0);

  const std::vector<Matrix> two{kTwoOne, kTwoOne};
  const auto sq = verify_hopf(two, kCounting2, vec({1, 0}), vec({0, 1}));
  // (5,4)/9 vs (4,5)/9
  CHECK(sq.achieved == doctest::Approx(2.0 / 9.0));
  CHECK(sq.achieved <= sq.bound + 1e-12);

  const std::vector<Matrix> bad{Matrix::Identity(2, 2)};
  CHECK_THROWS_AS(verify_hopf(bad, kCounting2, vec({1, 0}), vec({0, 1})), Error);
  const std::vector<Matrix> rowless{mat({{1, 1}, {0, 0}})};
  CHECK_THROWS_AS(verify_hopf(rowless, kCounting2, vec({0, 1}), vec({1, 0})), Error);
}

TEST_CASE("Birkhoff oscillation step") {
  const Subset both{0, 1};
  const auto prop = birkhoff_osc_step(kTwoOne, kCounting2, vec({1, 1}), vec({2, 2}), both, both);
  CHECK(prop.lhs == doctest::Approx(0.0));
  CHECK(prop.rhs == doctest::Approx(0.0));
  const auto step = birkhoff_osc_step(kTwoOne, kCounting2, vec({1, 1}), vec({1, 0}), both, both);
  CHECK(step.lhs == doctest::Approx(1.0 / 3.0));
  CHECK(step.rhs == doctest::Approx(1.0 / 3.0));
  CHECK(step.holds);

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> w(0.1, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 4;
    const Matrix k = testing::positive_matrix(rng, n, n);
    Vector lambda(n), u(n), v(n);
    for (int s = 0; s < n; ++s) {
      lambda(s) = w(rng);
      u(s) = w(rng);
      v(s) = w(rng);
    }
    Subset all(n);
    for (int s = 0; s < n; ++s) all[s] = s;
    CHECK(birkhoff_osc_step(k, lambda, u, v, all, all).holds);
  }
}

TEST_CASE("Condition P") {
  const HmmModel part = two_state_partition();
  const Density pi = vec({0.5, 0.5});
  const auto p = check_condition_P(part, pi, {0}, {0});
  REQUIRE(std::holds_alternative<PCertificate>(p));
  const auto& c = std::get<PCertificate>(p);
  CHECK(c.d0 == doctest::Approx(0.7));
  CHECK(c.big_d0 == doctest::Approx(0.7));
  CHECK(c.beta0 == 1.0);
  REQUIRE(c.f1.size() == 1);
  CHECK(c.f1[0].second == Subset{0});

  // Three-cell partition: F0 = S_1 = {1, 2}, B0 = {1}.
  const Matrix p3 = mat({{0.5, 0.3, 0.2}, {0.2, 0.6, 0.2}, {0.3, 0.3, 0.4}});
  const HmmModel part3 = example_partition(p3, {{0, 1}, {2}});
  const auto c3 = check_condition_P(part3, stationary(part3).pi, {0, 1}, {0});
  REQUIRE(std::holds_alternative<PCertificate>(c3));
  CHECK(std::get<PCertificate>(c3).d0 == doctest::Approx(0.2));
  CHECK(std::get<PCertificate>(c3).big_d0 == doctest::Approx(0.6));

  // F1 leaves F0.
  const auto leave = check_condition_P(m2_model(), pi, {0}, {0});
  REQUIRE(std::holds_alternative<PViolation>(leave));
  CHECK(std::get<PViolation>(leave).clause == "3a");

  // Zero inside the block.
  const Matrix pz = mat({{0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}, {0.3, 0.3, 0.4}});
  const HmmModel zero = example_partition(pz, {{0, 1}, {2}});
  const auto hole = check_condition_P(zero, stationary(zero).pi, {0, 1}, {0});
  REQUIRE(std::holds_alternative<PViolation>(hole));
  CHECK(std::get<PViolation>(hole).clause == "3c");

  const auto nopi = check_condition_P(part, vec({1, 0}), {1}, {1});
  REQUIRE(std::holds_alternative<PViolation>(nopi));
  CHECK(std::get<PViolation>(nopi).clause == "1");
  CHECK_THROWS_AS(check_condition_P(part, pi, {0}, {7}), Error);
}

TEST_CASE("E1 constants") {
  CHECK(e1_horizon(1.0, 0.1) == 1);
  CHECK(e1_horizon(2.0, 0.1) == 3);
  for (double kappa : {1.0, 3.0, 50.0, 1e6}) CHECK(e1_horizon(kappa, 2.0) == 1);
  CHECK_THROWS_AS(e1_horizon(0.5, 0.1), Error);

  const HmmModel part = two_state_partition();
  const Density pi = stationary(part).pi;
  const auto cert = std::get<PCertificate>(check_condition_P(part, pi, {0}, {0}));
  const auto e1 = e1_constants(part, pi, cert, 0.1);
  CHECK(e1.certificate.n == 1);
  CHECK(e1.certificate.kappa == doctest::Approx(1.0));
  CHECK(e1.certificate.xi == doctest::Approx(0.25));
  CHECK(e1.certificate.beta == doctest::Approx(1.0));
  CHECK(e1.certificate.eta == doctest::Approx(0.175));
  CHECK(e1.certificate.alpha() == doctest::Approx(0.0109375));
  CHECK(e1.verification.passed());
  CHECK(e1.verification.exhaustive_sequences);

  PCertificate broken = cert;
  broken.d0 = 0.8;
  CHECK_THROWS_AS(e1_constants(part, pi, broken, 0.1), Error);
  CHECK_THROWS_AS(e1_constants(part, pi, cert, 0.0), Error);
}

TEST_CASE("E1 verification on a three-state partition") {
  const Matrix p3 = mat({{0.5, 0.3, 0.2}, {0.2, 0.6, 0.2}, {0.3, 0.3, 0.4}});
  const HmmModel part3 = example_partition(p3, {{0, 1}, {2}});
  const Density pi = stationary(part3).pi;
  const auto cert = std::get<PCertificate>(check_condition_P(part3, pi, {0, 1}, {0}));
  E1VerifyOptions opts;
  opts.pairs = 200;
  const auto e1 = e1_constants(part3, pi, cert, 0.1, opts);
  CHECK(e1.certificate.kappa == doctest::Approx(3.0));
  CHECK(e1.certificate.n == e1_horizon(3.0, 0.1));
  CHECK(e1.verification.passed());
  CHECK(e1.verification.max_distance < 0.1);
}
