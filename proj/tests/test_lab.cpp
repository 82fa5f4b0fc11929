#include <doctest.h>

#include <cmath>
#include <random>

#include "hmmerg/lab.hpp"
#include "support.hpp"

using namespace hmmerg;
using testing::mat;
using testing::max_abs;
using testing::vec;

namespace {

const Matrix kSym = mat({{0.7, 0.3}, {0.3, 0.7}});

ErrorCode code_of(const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("partition models mask columns") {
  const HmmModel part = example_partition(kSym, {{0}, {1}});
  CHECK(max_abs(part.stepping(0), mat({{0.7, 0}, {0.3, 0}})) == 0.0);
  CHECK(max_abs(part.stepping(1), mat({{0, 0.3}, {0, 0.7}})) == 0.0);

  CHECK(code_of([&] { example_partition(kSym, {{0}}); }) == ErrorCode::BadPartition);
  CHECK(code_of([&] { example_partition(kSym, {{0, 1}, {1}}); }) == ErrorCode::BadPartition);
  CHECK(code_of([&] { example_partition(kSym, {{0}, {}}); }) == ErrorCode::BadPartition);
  CHECK(code_of([&] { example_partition(kSym, {{0}, {2}}); }) == ErrorCode::BadPartition);
  CHECK(code_of([&] { example_partition(mat({{0.7, 0.2}, {0.3, 0.7}}), {{0}, {1}}); }) ==
        ErrorCode::NonStochastic);
}

TEST_CASE("single-cell partition carries no information") {
  const HmmModel blind = example_partition(kSym, {{0, 1}});
  Density x = vec({0.9, 0.1});
  const auto laws = pushforward_n(blind, x, 5);
  REQUIRE(laws.nodes.size() == 1);
  for (int n = 0; n < 5; ++n) x = kSym.transpose() * x;
  CHECK((laws.nodes[0].point - x).cwiseAbs().maxCoeff() < 1e-14);

  const std::vector<std::pair<Density, Density>> pair{{vec({1, 0}), vec({0, 1})}};
  const auto report = weak_contraction_report(blind, pair, 6);
  for (const auto& row : report.series[0].rows) CHECK(std::abs(row.distance - row.floor) < 1e-12);
}

TEST_CASE("partition hypotheses") {
  const auto hyp = partition_hypotheses(kSym, {{0}, {1}}, vec({0.5, 0.5}));
  REQUIRE(hyp.first_cell);
  CHECK(*hyp.first_cell == 0);
  REQUIRE(hyp.cells[0].certificate);
  CHECK(hyp.cells[0].d0 == doctest::Approx(0.7));
  CHECK(hyp.cells[1].pi_mass == doctest::Approx(0.5));

  const Matrix pz = mat({{0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}, {0.3, 0.3, 0.4}});
  const auto holes = partition_hypotheses(pz, {{0, 1}, {2}}, vec({1.0 / 3, 1.0 / 3, 1.0 / 3}));
  CHECK_FALSE(holes.cells[0].holds);
  CHECK(holes.cells[1].holds);
  CHECK(*holes.first_cell == 1);
}

TEST_CASE("product models") {
  const Matrix q = mat({{0.8, 0.2}, {0.2, 0.8}});
  const HmmModel m2 = example_product(kSym, q, vec({1, 1}));
  const HmmModel ref = m2_model();
  for (std::size_t a = 0; a < 2; ++a) CHECK(max_abs(m2.stepping(a), ref.stepping(a)) == 0.0);

  // Uniform emission: every observation leaves the density at xP.
  const HmmModel flat = example_product(kSym, Matrix::Constant(2, 4, 0.25), vec({1, 1, 1, 1}));
  for (std::size_t a = 0; a < 4; ++a) {
    const Density z = update(flat, vec({1, 0}), a);
    CHECK(z(0) == doctest::Approx(0.7));
  }

  CHECK(code_of([&] { example_product(kSym, mat({{0.5, 0.4}, {0.5, 0.5}}), vec({1, 1})); }) ==
        ErrorCode::NonStochasticEmission);
  CHECK(code_of([&] { example_product(kSym, mat({{1.2, -0.2}, {0.5, 0.5}}), vec({1, 1})); }) ==
        ErrorCode::NegativeDensity);
  // Non-counting tau.
  const HmmModel weighted = example_product(kSym, mat({{0.5, 1.0}, {0.0, 2.0}}), vec({1.0, 0.5}));
  CHECK(weighted.obs().weight(1) == 0.5);
}

TEST_CASE("product hypotheses give the product certificate") {
  const Matrix p = mat({{0.5, 0.3, 0.2}, {0.4, 0.4, 0.2}, {0.3, 0.3, 0.4}});
  const Matrix q = mat({{0.5, 0.5}, {0.25, 0.75}, {0.0, 1.0}});
  const HmmModel model = example_product(p, q, vec({1, 1}));
  const Density pi = stationary(model).pi;
  const auto hyp = product_hypotheses(p, q, model, pi, {0, 1}, {0});
  CHECK(hyp.supports_inside);
  CHECK(hyp.c0 == 0.25);
  CHECK(hyp.big_c0 == 0.5);
  CHECK(hyp.c1 == 0.3);
  CHECK(hyp.big_c1 == 0.5);
  REQUIRE(hyp.certificate);
  CHECK(hyp.certificate->d0 == doctest::Approx(0.075));
  CHECK(hyp.certificate->big_d0 == doctest::Approx(0.25));
  const auto e1 = e1_constants(model, pi, *hyp.certificate, 0.5);
  CHECK(e1.verification.passed());

  const auto outside = product_hypotheses(p, q, model, pi, {0, 1}, {1});
  CHECK_FALSE(outside.supports_inside);
  CHECK_FALSE(outside.certificate);
}

TEST_CASE("geometric rate fit") {
  std::vector<double> v;
  for (int n = 0; n < 10; ++n) v.push_back(3.0 * std::pow(0.4, n));
  const auto fit = fit_geometric_rate(v);
  REQUIRE(fit.rate);
  CHECK(*fit.rate == doctest::Approx(0.4));
  CHECK(fit.residual < 1e-12);
  CHECK_FALSE(fit_geometric_rate({1.0}).rate);
}

TEST_CASE("weak contraction on M2") {
  const HmmModel m2 = m2_model();
  const std::vector<std::pair<Density, Density>> same{{vec({0.3, 0.7}), vec({0.3, 0.7})}};
  for (const auto& row : weak_contraction_report(m2, same, 4).series[0].rows) CHECK(row.distance < 1e-14);

  const std::vector<std::pair<Density, Density>> ends{{vec({1, 0}), vec({0, 1})}};
  const auto report = weak_contraction_report(m2, ends, 8);
  CHECK(report.passed);
  for (const auto& row : report.series[0].rows) {
    CHECK(std::abs(row.floor - 2.0 * std::pow(0.4, static_cast<double>(row.n))) < 1e-12);
    CHECK(row.distance >= row.floor - 1e-10);
  }
  CHECK(report.series[0].rows.back().distance < report.series[0].rows.front().distance);
}

TEST_CASE("simplex grids") {
  const auto g2 = simplex_grid(vec({1, 1}), 0.25);
  CHECK(g2.size() == 5);
  const auto g3 = simplex_grid(vec({1, 2, 1}), 0.5);
  CHECK(g3.size() == 6);
  for (const auto& x : g3) CHECK(total_mass(x, vec({1, 2, 1})) == doctest::Approx(1.0));
  const auto g5 = simplex_grid(Vector::Ones(5), 0.0, 30);
  CHECK(g5.size() >= 30);
}

TEST_CASE("oscillation decay") {
  const HmmModel m2 = m2_model();
  const auto grid = simplex_grid(m2.lambda(), 0.05);
  const std::vector<LipschitzFunction> fs{constant_function(1.0), coordinate_function(0, m2.lambda())};
  const auto report = osc_decay_report(m2, fs, 8, grid);
  for (const auto& row : report.series[0].rows) CHECK(row.osc < 1e-14);
  const auto& first = report.series[1];
  CHECK(first.monotone);
  CHECK(first.decays);
  REQUIRE(first.fit.rate);
  CHECK(*first.fit.rate < 1.0);

  const HmmModel periodic = periodic_two_cycle();
  const std::vector<LipschitzFunction> u{coordinate_function(0, periodic.lambda())};
  const auto flat = osc_decay_report(periodic, u, 8, simplex_grid(periodic.lambda(), 0.05));
  CHECK(flat.series[0].plateau);
  CHECK_FALSE(flat.series[0].decays);

  const HmmModel parity = parity_walk();
  // Linear functions still decay here (xP^n converges); the filter itself does not forget.
  const std::vector<LipschitzFunction> v{max_coordinate_function(parity.lambda())};
  auto grid4 = simplex_grid(parity.lambda(), 0.0, 40);
  grid4.push_back(uniform_density(parity.lambda()));
  const auto stuck = osc_decay_report(parity, v, 6, grid4);
  CHECK(stuck.series[0].plateau);
}

TEST_CASE("barycenter identity") {
  const HmmModel m2 = m2_model();
  CHECK(barycenter_identity_check(m2, {vec({1, 0})}, 0).max_residual == 0.0);
  CHECK(barycenter_identity_check(m2, {vec({1, 0})}, 6).max_residual < 1e-12);
  std::mt19937_64 rng(55);
  const HmmModel h = random_model(rng, 5, 3, 0.2);
  std::vector<Density> starts;
  for (int k = 0; k < 4; ++k) starts.push_back(sample_simplex(h.lambda(), rng));
  const auto r = barycenter_identity_check(h, starts, 4);
  CHECK(r.passed);
}

TEST_CASE("tightness probe") {
  const HmmModel blind = example_partition(mat({{1.0}}), {{0}});
  const auto dirac = tightness_probe(blind, vec({1.0}), 0.1, {vec({1.0})}, 3);
  CHECK(dirac.liminf == 1.0);

  const HmmModel part = two_state_partition();
  const Density q = perron_density(part, {0});
  CHECK(q(0) == doctest::Approx(1.0));
  const std::vector<Density> starts{vec({1, 0}), vec({0, 1}), vec({0.5, 0.5})};
  const auto probe = tightness_probe(part, q, 0.1, starts, 6);
  CHECK(probe.liminf > 0.0);
  for (const auto& s : tightness_probe(part, q, 2.0, starts, 4).series)
    for (double m : s.mass) CHECK(m == doctest::Approx(1.0));
  CHECK_THROWS_AS(tightness_probe(part, q, 0.0, starts, 2), Error);
}

TEST_CASE("Perron density of a restricted block") {
  const Matrix p3 = mat({{0.5, 0.3, 0.2}, {0.2, 0.6, 0.2}, {0.3, 0.3, 0.4}});
  const HmmModel part3 = example_partition(p3, {{0, 1}, {2}});
  const Density q = perron_density(part3, {0, 1});
  // Left eigenvector of [[0.5,0.3],[0.2,0.6]] for eigenvalue 0.8: (2, 3) / 5.
  CHECK(q(0) == doctest::Approx(0.4));
  CHECK(q(1) == doctest::Approx(0.6));
  CHECK(q(2) == 0.0);
}

TEST_CASE("coupling inequality on the partition fixture") {
  const HmmModel part = two_state_partition();
  const Density pi = stationary(part).pi;
  const auto cert = std::get<PCertificate>(check_condition_P(part, pi, {0}, {0}));
  const auto e1 = e1_constants(part, pi, cert, 0.1);
  const auto c = coupling_inequality_check(part, pi, e1.certificate);
  CHECK(c.holds);
  CHECK(c.achieved_alpha >= c.alpha - 1e-12);
  CHECK(c.bound == doctest::Approx(2.0 - 0.0109375 * 1.9));
}

TEST_CASE("test functions") {
  const Vector lambda = vec({0.5, 1.0, 2.0});
  const Density x = vec({0.4, 0.2, 0.3});
  CHECK(coordinate_function(2, lambda)(x) == doctest::Approx(0.6));
  CHECK(subset_function({0, 1}, lambda)(x) == doctest::Approx(0.4));
  CHECK(max_coordinate_function(lambda)(x) == doctest::Approx(0.6));
  CHECK(distance_function(x, lambda)(x) == 0.0);
  CHECK(constant_function(-2.0).sup_norm == 2.0);
  CHECK(estimate_gamma(coordinate_function(0, lambda), lambda, 2000, 1) <= 0.5 + 1e-12);
  CHECK(estimate_gamma(distance_function(x, lambda), lambda, 2000, 1) <= 1.0 + 1e-12);
}
