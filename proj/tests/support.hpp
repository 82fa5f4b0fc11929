#pragma once

// Helpers shared by the test programs.

#include <initializer_list>
#include <random>
#include <vector>

#include "hmmerg/model.hpp"

namespace testing {

inline hmmerg::Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  hmmerg::Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline hmmerg::Vector vec(std::initializer_list<double> values) {
  hmmerg::Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline double max_abs(const hmmerg::Matrix& a, const hmmerg::Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// Dense strictly positive matrix with entries in [lo, hi].
inline hmmerg::Matrix positive_matrix(std::mt19937_64& rng, int rows, int cols, double lo = 0.05, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  hmmerg::Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

inline hmmerg::ModelSpec one_state_spec() {
  hmmerg::ModelSpec spec;
  spec.states = hmmerg::CellSpace::counting(1);
  spec.obs = hmmerg::CellSpace::counting(1);
  spec.m = {mat({{1.0}})};
  return spec;
}

}  // namespace testing

#include <algorithm>
#include <functional>
#include <numeric>

#include "hmmerg/measures.hpp"

namespace testing {

// Optimal transport between uniform-weight measures by brute force. Each
// atom of the n-atom side carries m units and each atom of the m-atom side n
// units; some optimal plan is an integer vertex of that transportation
// polytope, so enumerating every integer plan finds the optimum.
inline double brute_force_uniform(const std::vector<hmmerg::Density>& xs, const std::vector<hmmerg::Density>& ys,
                                  double total, const hmmerg::Vector& lambda) {
  const std::size_t n = xs.size(), m = ys.size();
  std::vector<std::vector<double>> cost(n, std::vector<double>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) cost[i][j] = hmmerg::tv_distance(xs[i], ys[j], lambda);
  std::vector<std::size_t> row(n, m), col(m, n);
  double best = 1e300;
  std::function<void(std::size_t, double)> fill = [&](std::size_t cell, double acc) {
    if (acc >= best) return;
    if (cell == n * m) {
      best = acc;
      return;
    }
    const std::size_t i = cell / m, j = cell % m;
    const std::size_t hi = std::min(row[i], col[j]);
    // The last cell of a row must exhaust it.
    const std::size_t lo = j + 1 == m ? row[i] : 0;
    if (lo > hi) return;
    for (std::size_t k = lo; k <= hi; ++k) {
      row[i] -= k;
      col[j] -= k;
      fill(cell + 1, acc + static_cast<double>(k) * cost[i][j]);
      row[i] += k;
      col[j] += k;
    }
  };
  fill(0, 0.0);
  return best * total / static_cast<double>(n * m);
}

inline hmmerg::PointMassMeasure uniform_measure(const std::vector<hmmerg::Density>& xs, double total = 1.0) {
  hmmerg::PointMassMeasure mu;
  for (const auto& x : xs) mu.add(x, total / static_cast<double>(xs.size()));
  return mu;
}

}  // namespace testing

namespace testing {

// Largest weight discrepancy between two finitely supported measures after
// matching atoms whose points agree within point_tol.
inline double measure_gap(const hmmerg::PointMassMeasure& a, const hmmerg::PointMassMeasure& b,
                          const hmmerg::Vector& lambda, double point_tol = 1e-9) {
  const auto ma = hmmerg::merge_atoms(a, lambda, point_tol);
  const auto mb = hmmerg::merge_atoms(b, lambda, point_tol);
  std::vector<char> used(mb.size(), 0);
  double gap = 0.0;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    bool found = false;
    for (std::size_t j = 0; j < mb.size() && !found; ++j) {
      if (used[j] || hmmerg::tv_distance(ma.points[i], mb.points[j], lambda) > point_tol) continue;
      used[j] = 1;
      found = true;
      gap = std::max(gap, std::abs(ma.weights[i] - mb.weights[j]));
    }
    if (!found) gap = std::max(gap, ma.weights[i]);
  }
  for (std::size_t j = 0; j < mb.size(); ++j)
    if (!used[j]) gap = std::max(gap, mb.weights[j]);
  return gap;
}

}  // namespace testing
