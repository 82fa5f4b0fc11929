#include <doctest.h>

#include <cmath>
#include <random>

#include "hmmerg/coupling.hpp"
#include "hmmerg/lab.hpp"
#include "support.hpp"

using namespace hmmerg;
using testing::vec;

namespace {

// Observation law G(x,.) as masses g(x,a) tau(a), computed from the kernels.
Vector obs_law(const HmmModel& model, const Density& x) {
  Vector g(static_cast<Eigen::Index>(model.num_obs()));
  const Vector mass = to_mass(x, model.lambda());
  for (std::size_t a = 0; a < model.num_obs(); ++a)
    g(static_cast<Eigen::Index>(a)) = (model.stepping(a).transpose() * mass).sum() * model.obs().weight(a);
  return g;
}

}  // namespace

TEST_CASE("maximal coupling of M2 observation laws") {
  const HmmModel m2 = m2_model();
  const auto c = vasershtein_obs_coupling(m2, vec({1, 0}), vec({0, 1}));
  CHECK(c.diagonal_mass() == doctest::Approx(0.76).epsilon(1e-14));
  REQUIRE(c.off_diagonal.size() == 1);
  CHECK(c.off_diagonal[0].a == 0);
  CHECK(c.off_diagonal[0].b == 1);
  CHECK(c.off_diagonal[0].mass == doctest::Approx(0.24).epsilon(1e-14));
  CHECK((c.row_marginal() - vec({0.62, 0.38})).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((c.col_marginal() - vec({0.38, 0.62})).cwiseAbs().maxCoeff() < 1e-15);

  const auto same = vasershtein_obs_coupling(m2, vec({0.3, 0.7}), vec({0.3, 0.7}));
  CHECK(same.off_diagonal.empty());
  CHECK((same.diagonal - obs_law(m2, vec({0.3, 0.7}))).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("coupling marginals and diagonal identity on random models") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const HmmModel h = random_model(rng, 2 + trial % 4, 2 + trial % 3, 0.1);
    const Density x = sample_simplex(h.lambda(), rng), y = sample_simplex(h.lambda(), rng);
    const auto c = vasershtein_obs_coupling(h, x, y);
    const Vector gx = obs_law(h, x), gy = obs_law(h, y);
    CHECK((c.row_marginal() - gx).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((c.col_marginal() - gy).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(c.diagonal_mass() - (1.0 - (gx - gy).lpNorm<1>() / 2.0)) < 1e-12);
    for (const auto& e : c.off_diagonal) CHECK(e.a != e.b);

    const auto joint = coupled_filter_step(h, x, y);
    CHECK(testing::measure_gap(joint.first_marginal(), pushforward(h, x), h.lambda()) < 1e-12);
    CHECK(testing::measure_gap(joint.second_marginal(), pushforward(h, y), h.lambda()) < 1e-12);
  }
}

TEST_CASE("coupled step on M2") {
  const HmmModel m2 = m2_model();
  const auto joint = coupled_filter_step(m2, vec({1, 0}), vec({0, 1}));
  CHECK(joint.atoms.size() == 3);
  CHECK(joint.total_mass() == doctest::Approx(1.0).epsilon(1e-14));

  const auto diag = coupled_filter_step(m2, vec({0.4, 0.6}), vec({0.4, 0.6}));
  for (const auto& atom : diag.atoms) CHECK((atom.x - atom.y).norm() == 0.0);
}

TEST_CASE("observation-level lower bound") {
  std::mt19937_64 rng(88);
  for (int trial = 0; trial < 50; ++trial) {
    const HmmModel h = random_model(rng, 3, 3);
    const Density x = sample_simplex(h.lambda(), rng), y = sample_simplex(h.lambda(), rng);
    const Subset b{0, 2};
    double eta = 1e300, beta = 0.0, diag = 0.0;
    const auto c = vasershtein_obs_coupling(h, x, y);
    for (std::size_t a : b) {
      eta = std::min({eta, likelihood(h, x, a), likelihood(h, y, a)});
      beta += h.obs().weight(a);
      diag += c.diagonal(static_cast<Eigen::Index>(a));
    }
    CHECK(diag >= eta * beta - 1e-14);
  }
}

TEST_CASE("coupled chain") {
  const HmmModel m2 = m2_model();
  const Density x = vec({1, 0}), y = vec({0.2, 0.8});
  const auto mu = PointMassMeasure::dirac(x), nu = PointMassMeasure::dirac(y);

  const auto zero = coupled_chain(m2, mu, nu, 0);
  REQUIRE(zero.atoms.size() == 1);
  CHECK(zero.atoms[0].weight == 1.0);

  const auto three = coupled_chain(m2, mu, nu, 3);
  CHECK(testing::measure_gap(three.first_marginal(), pushforward_n(m2, x, 3).measure(), m2.lambda()) < 1e-10);
  CHECK(testing::measure_gap(three.second_marginal(), pushforward_n(m2, y, 3).measure(), m2.lambda()) < 1e-10);

  const auto same = coupled_chain(m2, mu, mu, 4);
  CHECK(same.mass_within(1e-12, m2.lambda()) == doctest::Approx(1.0).epsilon(1e-12));

  CoupledChainOptions tiny;
  tiny.budget = 3;
  CHECK_THROWS_AS(coupled_chain(m2, mu, nu, 2, tiny), Error);
}

TEST_CASE("Condition E evidence") {
  const HmmModel m2 = m2_model();
  const Density pi = vec({0.5, 0.5});
  const auto full = condition_E_estimate(m2, pi, 2.0, 2);
  CHECK(full.rows.front().n == 0);
  CHECK(full.rows.front().alpha == doctest::Approx(1.0));
  CHECK_FALSE(full.note.empty());

  const MeasurePair twins{"twins", PointMassMeasure::dirac(pi), PointMassMeasure::dirac(pi)};
  const auto with_twins = condition_E_estimate(m2, pi, 0.1, 3, {}, std::span(&twins, 1));
  for (const auto& row : with_twins.rows)
    if (row.fixture == "twins") CHECK(row.alpha == doctest::Approx(1.0));

  const MeasurePair off{"off", PointMassMeasure::dirac(vec({1, 0})), PointMassMeasure::dirac(pi)};
  CHECK_THROWS_AS(condition_E_estimate(m2, pi, 0.1, 1, {}, std::span(&off, 1)), Error);
  CHECK_THROWS_AS(condition_E_estimate(m2, pi, 0.0, 1), Error);
  CHECK_THROWS_AS(condition_E_estimate(m2, pi, 2.5, 1), Error);
}

TEST_CASE("M2 reaches the certified coupled mass") {
  const HmmModel m2 = m2_model();
  const Density pi = stationary(m2).pi;
  const Subset f0{0, 1}, b0{0, 1};
  const auto p = check_condition_P(m2, pi, f0, b0);
  REQUIRE(std::holds_alternative<PCertificate>(p));
  const auto e1 = e1_constants(m2, pi, std::get<PCertificate>(p), 0.1);
  // N is large for M2 (kappa = 0.56 / 0.06); mass on D_rho appears much earlier.
  const auto report = condition_E_estimate(m2, pi, 0.1, std::min<std::size_t>(e1.certificate.n, 8));
  double best = 0.0;
  for (const auto& row : report.rows) best = std::max(best, row.alpha);
  CHECK(best >= e1.certificate.alpha() - 1e-12);
}
