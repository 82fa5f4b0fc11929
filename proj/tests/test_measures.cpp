#include <doctest.h>

#include <cmath>
#include <random>

#include "hmmerg/filter.hpp"
#include "hmmerg/lab.hpp"
#include "hmmerg/measures.hpp"
#include "support.hpp"

using namespace hmmerg;
using testing::vec;

namespace {

const Vector kCounting2 = vec({1.0, 1.0});

PointMassMeasure random_measure(std::mt19937_64& rng, const Vector& lambda, std::size_t atoms, double total = 1.0) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  PointMassMeasure mu;
  std::vector<double> w(atoms);
  double sum = 0.0;
  for (auto& x : w) sum += x = u(rng);
  for (std::size_t k = 0; k < atoms; ++k) mu.add(sample_simplex(lambda, rng), total * w[k] / sum);
  return mu;
}

}  // namespace

TEST_CASE("total variation distance") {
  CHECK(tv_distance(vec({0.3, 0.7}), vec({0.3, 0.7}), kCounting2) == 0.0);
  CHECK(tv_distance(vec({1, 0}), vec({0, 1}), kCounting2) == 2.0);
  CHECK(tv_distance(vec({0.8, 0.2}), vec({0.2, 0.8}), kCounting2) == doctest::Approx(1.2));
  // Weighted cells: ||x - y|| = sum |x - y| lambda.
  const Vector lambda = vec({0.5, 2.0});
  CHECK(tv_distance(vec({2.0, 0.0}), vec({0.0, 0.5}), lambda) == doctest::Approx(2.0));
  CHECK_THROWS_AS(tv_distance(vec({1.0}), vec({1.0, 0.0}), kCounting2), Error);
}

TEST_CASE("barycenters") {
  CHECK((barycenter(PointMassMeasure::dirac(vec({0.3, 0.7}))) - vec({0.3, 0.7})).norm() == 0.0);
  PointMassMeasure half;
  half.add(vec({1, 0}), 0.5);
  half.add(vec({0, 1}), 0.5);
  CHECK((barycenter(half) - vec({0.5, 0.5})).norm() < 1e-15);
  CHECK_THROWS_AS(barycenter(PointMassMeasure{}), Error);

  const HmmModel m2 = m2_model();
  Vector xp = vec({1.0, 0.0});
  for (std::size_t n = 0; n <= 6; ++n) {
    const Density bar = barycenter(pushforward_n(m2, vec({1.0, 0.0}), n).measure());
    CHECK((bar - xp).cwiseAbs().maxCoeff() < 1e-12);
    xp = m2.markov().transpose() * xp;
  }
}

TEST_CASE("Kantorovich distance on small examples") {
  const Density e1 = vec({1, 0}), e2 = vec({0, 1});
  PointMassMeasure half;
  half.add(e1, 0.5);
  half.add(e2, 0.5);
  const auto r = kantorovich(PointMassMeasure::dirac(e1), half, kCounting2);
  CHECK(r.distance == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.certificate.ok());

  const auto self = kantorovich(half, half, kCounting2);
  CHECK(self.distance == 0.0);
  for (const auto& e : self.plan.entries) CHECK(e.i == e.j);

  const auto dirac = kantorovich(PointMassMeasure::dirac(vec({0.8, 0.2})), PointMassMeasure::dirac(vec({0.2, 0.8})),
                                 kCounting2);
  CHECK(dirac.distance == doctest::Approx(1.2).epsilon(1e-14));

  const auto centered = kantorovich(half, PointMassMeasure::dirac(vec({0.5, 0.5})), kCounting2);
  CHECK(centered.distance == doctest::Approx(1.0));
  CHECK(barycenter_lower_bound(half, PointMassMeasure::dirac(vec({0.5, 0.5})), kCounting2) < 1e-15);
}

TEST_CASE("Kantorovich distance matches the permutation oracle") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t dim = 2 + trial % 4;
    Vector lambda(dim);
    std::uniform_real_distribution<double> w(0.5, 2.0);
    for (std::size_t s = 0; s < dim; ++s) lambda(s) = trial % 2 ? w(rng) : 1.0;
    std::vector<Density> xs, ys;
    const std::size_t n = 1 + trial % 4;
    const std::size_t m = 1 + (trial / 4) % 4;
    for (std::size_t k = 0; k < n; ++k) xs.push_back(sample_simplex(lambda, rng));
    for (std::size_t k = 0; k < m; ++k) ys.push_back(sample_simplex(lambda, rng));
    const double total = trial % 3 ? 1.0 : 0.6;
    const double oracle = testing::brute_force_uniform(xs, ys, total, lambda);
    const auto r = kantorovich(testing::uniform_measure(xs, total), testing::uniform_measure(ys, total), lambda);
    CHECK(std::abs(r.distance - oracle) < 1e-10);
    CHECK(r.method == (dim == 2 ? "monotone-1d" : "min-cost-flow"));
  }
}

TEST_CASE("Kantorovich is a metric") {
  std::mt19937_64 rng(202);
  const Vector lambda = vec({1.0, 0.5, 2.0});
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = random_measure(rng, lambda, 3);
    const auto b = random_measure(rng, lambda, 4);
    const auto c = random_measure(rng, lambda, 2);
    const double ab = kantorovich(a, b, lambda).distance;
    CHECK(std::abs(ab - kantorovich(b, a, lambda).distance) < 1e-12);
    CHECK(ab <= kantorovich(a, c, lambda).distance + kantorovich(c, b, lambda).distance + 1e-9);
  }
}

TEST_CASE("scaling with total mass") {
  std::mt19937_64 rng(303);
  const Vector lambda = vec({1, 1, 1});
  const auto a = random_measure(rng, lambda, 3);
  const auto b = random_measure(rng, lambda, 3);
  PointMassMeasure a3 = a, b3 = b;
  for (auto& w : a3.weights) w *= 3.0;
  for (auto& w : b3.weights) w *= 3.0;
  CHECK(std::abs(kantorovich(a3, b3, lambda).distance - 3.0 * kantorovich(a, b, lambda).distance) < 1e-12);
}

TEST_CASE("primal-dual sandwich") {
  std::mt19937_64 rng(404);
  const Vector lambda = vec({1, 2, 1, 0.5});
  for (int trial = 0; trial < 20; ++trial) {
    const auto mu = random_measure(rng, lambda, 3);
    const auto nu = random_measure(rng, lambda, 3);
    const auto r = kantorovich(mu, nu, lambda);
    const Density bm = barycenter(mu), bn = barycenter(nu);
    const std::vector<LipschitzFunction> duals{constant_function(0.0), hahn_witness(bm, bn, lambda),
                                               coordinate_function(0, lambda)};
    const double dual = kantorovich_dual_check(mu, nu, duals);
    CHECK(dual <= r.distance + 1e-10);
    CHECK(std::abs(integrate(duals[1], mu) - integrate(duals[1], nu) - tv_distance(bm, bn, lambda)) < 1e-12);
    // Product coupling is feasible.
    std::vector<TransportEntry> product;
    for (std::size_t i = 0; i < mu.size(); ++i)
      for (std::size_t j = 0; j < nu.size(); ++j) product.push_back({i, j, mu.weights[i] * nu.weights[j], 0.0});
    CHECK(r.distance <= coupling_cost(mu, nu, product, lambda) + 1e-12);
    CHECK(barycenter_lower_bound(mu, nu, lambda) <= r.distance + 1e-10);
  }
}

TEST_CASE("Kantorovich input errors") {
  PointMassMeasure a = PointMassMeasure::dirac(vec({1, 0}));
  PointMassMeasure b = PointMassMeasure::dirac(vec({0, 1}), 0.5);
  CHECK_THROWS_AS(kantorovich(a, b, kCounting2), Error);
  CHECK_THROWS_AS(kantorovich(a, PointMassMeasure{}, kCounting2), Error);
  try {
    kantorovich(a, b, kCounting2);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MassMismatch);
  }
}

TEST_CASE("barycenter matching") {
  PointMassMeasure half;
  half.add(vec({1, 0}), 0.5);
  half.add(vec({0, 1}), 0.5);
  const auto same = barycenter_match(half, vec({0.5, 0.5}), kCounting2);
  for (std::size_t k = 0; k < 2; ++k) CHECK((same.points[k] - half.points[k]).norm() < 1e-15);

  const auto moved = barycenter_match(half, vec({1.0, 0.0}), kCounting2);
  double cost = 0.0;
  for (std::size_t k = 0; k < 2; ++k) cost += 0.5 * tv_distance(half.points[k], moved.points[k], kCounting2);
  CHECK(cost == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((barycenter(moved) - vec({1.0, 0.0})).cwiseAbs().maxCoeff() < 1e-14);

  const auto base = barycenter_match(PointMassMeasure::dirac(vec({1, 0})), vec({0.3, 0.7}), kCounting2);
  CHECK((base.points[0] - vec({0.3, 0.7})).cwiseAbs().maxCoeff() < 1e-15);

  CHECK_THROWS_AS(barycenter_match(half, vec({1.2, -0.2}), kCounting2), Error);
  CHECK_THROWS_AS(barycenter_match(half, vec({0.9, 0.9}), kCounting2), Error);
}

TEST_CASE("nearest barycenter distance") {
  const Density pi = vec({0.5, 0.5}), y = vec({0.7, 0.3});
  const auto a = nearest_barycenter_distance(PointMassMeasure::dirac(pi), y, kCounting2);
  CHECK(a.achieved == doctest::Approx(0.4).epsilon(1e-12));
  CHECK((a.psi.points[0] - y).cwiseAbs().maxCoeff() < 1e-15);

  const auto b = nearest_barycenter_distance(vertex_measure(pi, kCounting2), y, kCounting2);
  CHECK(std::abs(b.achieved - 0.4) < 1e-9);
  CHECK(std::abs(b.lower_bound - 0.4) < 1e-12);

  const auto c = nearest_barycenter_distance(PointMassMeasure::dirac(pi), pi, kCounting2);
  CHECK(c.achieved == 0.0);
}

TEST_CASE("half-mass sets") {
  const Density pi = vec({0.5, 0.5});
  const std::vector<std::size_t> f{0};
  const auto dirac = half_mass_check(PointMassMeasure::dirac(pi), pi, f, kCounting2);
  CHECK(dirac.mass == 1.0);
  CHECK(dirac.bound == 0.25);
  const auto verts = half_mass_check(vertex_measure(pi, kCounting2), pi, f, kCounting2);
  CHECK(verts.mass == doctest::Approx(0.5));
  CHECK(verts.holds);

  const Density edge = vec({1.0, 0.0});
  const std::vector<std::size_t> g{1};
  const auto empty = half_mass_check(PointMassMeasure::dirac(edge), edge, g, kCounting2);
  CHECK(empty.bound == 0.0);
  CHECK(empty.holds);
  CHECK_THROWS_AS(half_mass_check(PointMassMeasure::dirac(edge), pi, f, kCounting2), Error);
}

TEST_CASE("merging atoms") {
  PointMassMeasure mu;
  mu.add(vec({0.5, 0.5}), 0.2);
  mu.add(vec({1.0, 0.0}), 0.3);
  mu.add(vec({0.5, 0.5 + 1e-14}), 0.5);
  const auto merged = merge_atoms(mu, kCounting2, 1e-12);
  REQUIRE(merged.size() == 2);
  CHECK(merged.weights[0] == doctest::Approx(0.7));
  CHECK(merged.points[0](1) == 0.5);
}
