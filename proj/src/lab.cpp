#include "hmmerg/lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hmmerg {

namespace {

void check_square(const Matrix& p, const char* what) {
  if (p.rows() == 0 || p.rows() != p.cols())
    fail(ErrorCode::InvalidArgument, std::string(what) + " must be a nonempty square matrix");
}

CellSpace counting_obs(std::size_t n, const Vector& tau) {
  std::vector<std::string> ids;
  for (std::size_t a = 0; a < n; ++a) ids.push_back(std::to_string(a + 1));
  return CellSpace(std::move(ids), tau);
}

Matrix sym_p() {
  Matrix p(2, 2);
  p << 0.7, 0.3, 0.3, 0.7;
  return p;
}

// Advance a measure one filter step, merging coincident atoms.
PointMassMeasure step_measure(const HmmModel& model, const PointMassMeasure& mu, const PushforwardOptions& options,
                              double& pruned, std::size_t& expansions) {
  expansions += mu.size() * model.num_obs();
  if (expansions > options.budget)
    fail(ErrorCode::BudgetExceeded, "enumeration needs more than " + std::to_string(options.budget) + " expansions");
  double p = 0.0;
  PointMassMeasure next = pushforward_measure(model, mu, 1, options, &p);
  pruned += p;
  return next;
}

PointMassMeasure renormalized(PointMassMeasure mu) {
  const double total = mu.total_mass();
  if (total > 0.0 && std::abs(total - 1.0) > 0.0)
    for (double& w : mu.weights) w /= total;
  return mu;
}

}  // namespace

HmmModel example_partition(const Matrix& p, const std::vector<Subset>& partition) {
  check_square(p, "p");
  const auto ns = static_cast<std::size_t>(p.rows());
  if (partition.empty()) fail(ErrorCode::BadPartition, "no cells");
  std::vector<int> owner(ns, -1);
  for (std::size_t a = 0; a < partition.size(); ++a) {
    if (partition[a].empty()) fail(ErrorCode::BadPartition, "cell " + std::to_string(a + 1) + " is empty");
    for (std::size_t t : partition[a]) {
      if (t >= ns) fail(ErrorCode::BadPartition, "state " + std::to_string(t + 1) + " out of range");
      if (owner[t] >= 0)
        fail(ErrorCode::BadPartition, "state " + std::to_string(t + 1) + " lies in two cells");
      owner[t] = static_cast<int>(a);
    }
  }
  for (std::size_t t = 0; t < ns; ++t)
    if (owner[t] < 0) fail(ErrorCode::BadPartition, "state " + std::to_string(t + 1) + " is not covered");

  ModelSpec spec;
  spec.states = CellSpace::counting(ns);
  spec.obs = CellSpace::counting(partition.size());
  for (std::size_t a = 0; a < partition.size(); ++a) {
    Matrix m = Matrix::Zero(p.rows(), p.cols());
    for (std::size_t t : partition[a]) m.col(static_cast<Eigen::Index>(t)) = p.col(static_cast<Eigen::Index>(t));
    spec.m.push_back(std::move(m));
  }
  return build_model(spec);
}

PartitionHypotheses partition_hypotheses(const Matrix& p, const std::vector<Subset>& partition, const Density& pi) {
  const HmmModel model = example_partition(p, partition);
  PartitionHypotheses out;
  for (std::size_t a = 0; a < partition.size(); ++a) {
    PartitionCellCheck cell;
    cell.cell = a;
    cell.d0 = std::numeric_limits<double>::infinity();
    for (std::size_t s : partition[a])
      for (std::size_t t : partition[a]) {
        const double v = p(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
        cell.d0 = std::min(cell.d0, v);
        cell.big_d0 = std::max(cell.big_d0, v);
      }
    cell.pi_mass = subset_mass(pi, partition[a], model.lambda());
    cell.holds = cell.d0 > 0.0 && cell.pi_mass > 0.0;
    if (cell.holds) {
      const PCheck check = check_condition_P(model, pi, partition[a], {a});
      if (const auto* cert = std::get_if<PCertificate>(&check)) cell.certificate = *cert;
      if (!out.first_cell) out.first_cell = a;
    }
    out.cells.push_back(std::move(cell));
  }
  return out;
}

HmmModel example_product(const Matrix& p, const Matrix& q, const Vector& tau) {
  check_square(p, "p");
  if (q.rows() != p.rows() || q.cols() != tau.size() || tau.size() == 0)
    fail(ErrorCode::InvalidArgument, "q must be |S| x |A| with |A| = size of tau");
  if ((q.array() < 0.0).any()) fail(ErrorCode::NegativeDensity, "q has a negative entry");
  const Vector row = q * tau;
  for (Eigen::Index t = 0; t < row.size(); ++t)
    if (std::abs(row(t) - 1.0) > kStochasticTolerance)
      fail(ErrorCode::NonStochasticEmission,
           "sum_a q(t,a) tau(a) = " + std::to_string(row(t)) + " at t = " + std::to_string(t + 1));
  ModelSpec spec;
  spec.states = CellSpace::counting(static_cast<std::size_t>(p.rows()));
  spec.obs = counting_obs(static_cast<std::size_t>(tau.size()), tau);
  for (Eigen::Index a = 0; a < q.cols(); ++a) spec.m.push_back(p * q.col(a).asDiagonal());
  return build_model(spec);
}

ProductHypotheses product_hypotheses(const Matrix& p, const Matrix& q, const HmmModel& model, const Density& pi,
                                     const Subset& f0, const Subset& b0) {
  ProductHypotheses out;
  out.supports_inside = true;
  out.c0 = out.c1 = std::numeric_limits<double>::infinity();
  std::vector<char> in_f0(static_cast<std::size_t>(p.rows()), 0);
  for (std::size_t s : f0) in_f0.at(s) = 1;
  for (std::size_t a : b0)
    for (Eigen::Index t = 0; t < q.rows(); ++t) {
      const double v = q(t, static_cast<Eigen::Index>(a));
      if (!(v > 0.0)) continue;
      if (!in_f0[static_cast<std::size_t>(t)]) out.supports_inside = false;
      out.c0 = std::min(out.c0, v);
      out.big_c0 = std::max(out.big_c0, v);
    }
  for (std::size_t s : f0)
    for (std::size_t t : f0) {
      const double v = p(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
      out.c1 = std::min(out.c1, v);
      out.big_c1 = std::max(out.big_c1, v);
    }
  out.structural = check_condition_P(model, pi, f0, b0);
  if (const auto* cert = std::get_if<PCertificate>(&out.structural)) {
    if (out.supports_inside && out.c0 > 0.0 && out.c1 > 0.0 && std::isfinite(out.c0)) {
      PCertificate c = *cert;
      c.d0 = out.c0 * out.c1;
      c.big_d0 = out.big_c0 * out.big_c1;
      out.certificate = std::move(c);
    }
  }
  return out;
}

HmmModel m2_model() {
  Matrix q(2, 2);
  q << 0.8, 0.2, 0.2, 0.8;
  return example_product(sym_p(), q, Vector::Ones(2));
}

HmmModel two_state_partition() { return example_partition(sym_p(), {{0}, {1}}); }

HmmModel periodic_two_cycle() {
  Matrix p(2, 2);
  p << 0.0, 1.0, 1.0, 0.0;
  return example_partition(p, {{0, 1}});
}

HmmModel parity_walk() {
  Matrix p(4, 4);
  p << 0.5, 0.5, 0.0, 0.0,
       0.0, 0.5, 0.5, 0.0,
       0.0, 0.0, 0.5, 0.5,
       0.5, 0.0, 0.0, 0.5;
  return example_partition(p, {{0, 2}, {1, 3}});
}

HmmModel random_model(std::mt19937_64& rng, std::size_t states, std::size_t obs, double zero_chance) {
  if (states == 0 || obs == 0) fail(ErrorCode::InvalidArgument, "empty random model");
  std::uniform_real_distribution<double> weight(0.5, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  Vector lambda(static_cast<Eigen::Index>(states));
  Vector tau(static_cast<Eigen::Index>(obs));
  for (auto& v : lambda) v = weight(rng);
  for (auto& v : tau) v = weight(rng);
  std::vector<Matrix> m(obs, Matrix::Zero(lambda.size(), lambda.size()));
  for (std::size_t s = 0; s < states; ++s) {
    const auto S = static_cast<Eigen::Index>(s);
    double total = 0.0;
    for (std::size_t a = 0; a < obs; ++a)
      for (Eigen::Index t = 0; t < lambda.size(); ++t) {
        const double v = unit(rng) < zero_chance ? 0.0 : expo(rng);
        m[a](S, t) = v;
        total += v * lambda(t) * tau(static_cast<Eigen::Index>(a));
      }
    if (!(total > 0.0)) {
      m[0](S, 0) = 1.0;
      total = lambda(0) * tau(0);
    }
    for (auto& slice : m) slice.row(S) /= total;
  }
  ModelSpec spec;
  std::vector<std::string> sid, oid;
  for (std::size_t s = 0; s < states; ++s) sid.push_back("s" + std::to_string(s + 1));
  for (std::size_t a = 0; a < obs; ++a) oid.push_back("a" + std::to_string(a + 1));
  spec.states = CellSpace(std::move(sid), lambda);
  spec.obs = CellSpace(std::move(oid), tau);
  spec.m = std::move(m);
  return build_model(spec);
}

RateFit fit_geometric_rate(const std::vector<double>& values, std::size_t from) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = from; k < values.size(); ++k)
    if (values[k] > 1e-300) pts.emplace_back(static_cast<double>(k), std::log(values[k]));
  RateFit fit;
  if (pts.size() < 2) return fit;
  double mx = 0.0, my = 0.0;
  for (auto [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0.0, sxx = 0.0;
  for (auto [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  const double slope = sxy / sxx;
  double ss = 0.0;
  for (auto [x, y] : pts) {
    const double r = y - (my + slope * (x - mx));
    ss += r * r;
  }
  fit.rate = std::exp(slope);
  fit.residual = std::sqrt(ss / static_cast<double>(pts.size()));
  return fit;
}

WeakContractionReport weak_contraction_report(const HmmModel& model,
                                              const std::vector<std::pair<Density, Density>>& pairs,
                                              std::size_t n_max, const PushforwardOptions& options,
                                              double stop_below) {
  const Vector& lambda = model.lambda();
  WeakContractionReport report;
  report.n_max = n_max;
  report.threshold = stop_below;
  report.prune_eps = options.prune_eps;
  report.merge_tol = options.merge_tol;
  for (const auto& [x, y] : pairs) {
    WeakContractionSeries series;
    series.x = x;
    series.y = y;
    PointMassMeasure mx = PointMassMeasure::dirac(x);
    PointMassMeasure my = PointMassMeasure::dirac(y);
    Density xp = x, yp = y;
    double pruned_x = 0.0, pruned_y = 0.0;
    std::size_t expansions = 0;
    std::vector<double> distances;
    for (std::size_t n = 0; n <= n_max; ++n) {
      if (n > 0) {
        mx = step_measure(model, mx, options, pruned_x, expansions);
        my = step_measure(model, my, options, pruned_y, expansions);
        xp = push_density(xp, model.markov(), lambda);
        yp = push_density(yp, model.markov(), lambda);
      }
      const auto kr = kantorovich(renormalized(mx), renormalized(my), lambda);
      WeakContractionRow row;
      row.n = n;
      row.distance = kr.distance;
      row.floor = tv_distance(xp, yp, lambda);
      row.atoms_x = mx.size();
      row.atoms_y = my.size();
      row.pruned_x = pruned_x;
      row.pruned_y = pruned_y;
      row.method = kr.method;
      if (row.distance < row.floor - 1e-10) series.floor_respected = false;
      distances.push_back(row.distance);
      series.rows.push_back(std::move(row));
      if (stop_below > 0.0 && kr.distance < stop_below) {
        series.first_below = n;
        break;
      }
    }
    series.fit = fit_geometric_rate(distances, distances.size() / 2);
    report.passed = report.passed && series.floor_respected;
    report.series.push_back(std::move(series));
  }
  return report;
}

std::vector<Density> simplex_grid(const Vector& lambda, double step, std::size_t samples, std::uint64_t seed) {
  const auto ns = lambda.size();
  std::vector<Density> grid;
  if (ns == 1) {
    grid.push_back(vertex(0, lambda));
    return grid;
  }
  if (ns <= 3) {
    if (!(step > 0.0)) step = ns == 2 ? 0.02 : 0.05;
    const auto k = static_cast<long>(std::llround(1.0 / step));
    if (k < 1) fail(ErrorCode::InvalidArgument, "grid step too large");
    for (long i = 0; i <= k; ++i) {
      if (ns == 2) {
        Vector mass(2);
        mass << static_cast<double>(i) / static_cast<double>(k), static_cast<double>(k - i) / static_cast<double>(k);
        grid.push_back(to_density(mass, lambda));
        continue;
      }
      for (long j = 0; i + j <= k; ++j) {
        Vector mass(3);
        mass << static_cast<double>(i) / static_cast<double>(k), static_cast<double>(j) / static_cast<double>(k),
            static_cast<double>(k - i - j) / static_cast<double>(k);
        grid.push_back(to_density(mass, lambda));
      }
    }
    return grid;
  }
  std::mt19937_64 rng(seed);
  for (Eigen::Index s = 0; s < ns; ++s) grid.push_back(vertex(static_cast<std::size_t>(s), lambda));
  for (std::size_t k = 0; k < samples; ++k) grid.push_back(sample_simplex(lambda, rng));
  return grid;
}

OscDecayReport osc_decay_report(const HmmModel& model, const std::vector<LipschitzFunction>& functions,
                                std::size_t n_max, const std::vector<Density>& grid,
                                const PushforwardOptions& options) {
  if (grid.empty()) fail(ErrorCode::InvalidArgument, "empty evaluation grid");
  const std::size_t nf = functions.size();
  // hi[f][n], lo[f][n]
  std::vector<std::vector<double>> hi(nf, std::vector<double>(n_max + 1, -std::numeric_limits<double>::infinity()));
  std::vector<std::vector<double>> lo(nf, std::vector<double>(n_max + 1, std::numeric_limits<double>::infinity()));
  std::size_t expansions = 0;
  for (const auto& x : grid) {
    const auto result = pushforward_levels(model, x, n_max, options, [&](std::size_t level, const PushforwardResult& r) {
      for (std::size_t f = 0; f < nf; ++f) {
        double total = 0.0;
        for (const auto& node : r.nodes) total += node.weight * functions[f](node.point);
        hi[f][level] = std::max(hi[f][level], total);
        lo[f][level] = std::min(lo[f][level], total);
      }
    });
    expansions += result.expansions;
    if (expansions > options.budget)
      fail(ErrorCode::BudgetExceeded, "oscillation grid needs more than " + std::to_string(options.budget) +
                                          " expansions");
  }

  OscDecayReport report;
  report.grid_points = grid.size();
  report.prune_eps = options.prune_eps;
  report.merge_tol = options.merge_tol;
  for (std::size_t f = 0; f < nf; ++f) {
    OscSeries series;
    series.function = functions[f].name;
    std::vector<double> osc;
    for (std::size_t n = 0; n <= n_max; ++n) {
      OscRow row{n, hi[f][n], lo[f][n], std::max(0.0, hi[f][n] - lo[f][n])};
      if (n > 0 && row.osc > series.rows.back().osc + 1e-12) series.monotone = false;
      osc.push_back(row.osc);
      series.rows.push_back(row);
    }
    const std::size_t mid = n_max / 2;
    series.fit = fit_geometric_rate(osc, mid);
    const double last = osc.back();
    series.plateau = last > 1e-12 && last >= (1.0 - 1e-6) * osc[mid];
    series.decays = !series.plateau && (last <= 1e-12 || (series.fit.rate && *series.fit.rate < 1.0 - 1e-6));
    report.series.push_back(std::move(series));
  }
  return report;
}

BarycenterIdentityReport barycenter_identity_check(const HmmModel& model, const std::vector<Density>& starts,
                                                   std::size_t n_max, const PushforwardOptions& options) {
  const Vector& lambda = model.lambda();
  BarycenterIdentityReport report;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    std::vector<Density> xp{starts[k]};
    for (std::size_t n = 1; n <= n_max; ++n) xp.push_back(push_density(xp.back(), model.markov(), lambda));
    pushforward_levels(model, starts[k], n_max, options, [&](std::size_t level, const PushforwardResult& r) {
      const double residual = tv_distance(barycenter(r.measure()), xp[level], lambda);
      if (residual > report.max_residual) {
        report.max_residual = residual;
        report.worst_start = k;
        report.worst_n = level;
      }
    });
  }
  report.passed = report.max_residual < 1e-10;
  return report;
}

TightnessReport tightness_probe(const HmmModel& model, const Density& x0, double epsilon,
                                const std::vector<Density>& starts, std::size_t n_max,
                                const PushforwardOptions& options) {
  if (!(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be positive");
  const Vector& lambda = model.lambda();
  TightnessReport report;
  report.x0 = x0;
  report.epsilon = epsilon;
  report.liminf = std::numeric_limits<double>::infinity();
  for (const auto& x : starts) {
    TightnessSeries series;
    series.start = x;
    const auto result = pushforward_levels(model, x, n_max, options, [&](std::size_t, const PushforwardResult& r) {
      double mass = 0.0;
      for (const auto& node : r.nodes)
        if (tv_distance(node.point, x0, lambda) <= epsilon) mass += node.weight;
      series.mass.push_back(std::min(mass, 1.0));
    });
    report.pruned_mass = std::max(report.pruned_mass, result.pruned_mass);
    series.liminf = *std::min_element(series.mass.begin() + static_cast<long>(n_max / 2), series.mass.end());
    report.liminf = std::min(report.liminf, series.liminf);
    report.series.push_back(std::move(series));
  }
  if (starts.empty()) report.liminf = 0.0;
  return report;
}

Density perron_density(const HmmModel& model, const Subset& f0) {
  if (f0.empty()) fail(ErrorCode::InvalidArgument, "empty F0");
  const Vector& lambda = model.lambda();
  const auto k = static_cast<Eigen::Index>(f0.size());
  Matrix block(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      block(i, j) = model.markov()(static_cast<Eigen::Index>(f0.at(static_cast<std::size_t>(i))),
                                   static_cast<Eigen::Index>(f0.at(static_cast<std::size_t>(j))));
  // Lazy power iteration on mass row vectors; same eigenvector, no periodicity.
  Vector v = Vector::Constant(k, 1.0 / static_cast<double>(k));
  for (std::size_t it = 0; it < 1'000'000; ++it) {
    Vector w = 0.5 * (v + block.transpose() * v);
    const double total = w.sum();
    if (!(total > 0.0)) fail(ErrorCode::DivisionByZeroMass, "restricted kernel annihilates F0");
    w /= total;
    const double change = (w - v).lpNorm<1>();
    v = std::move(w);
    if (change < 1e-15) break;
  }
  Vector mass = Vector::Zero(lambda.size());
  for (Eigen::Index i = 0; i < k; ++i) mass(static_cast<Eigen::Index>(f0[static_cast<std::size_t>(i)])) = v(i);
  return to_density(mass, lambda);
}

CouplingInequalityCheck coupling_inequality_check(const HmmModel& model, const Density& pi,
                                                  const E1Certificate& cert, const CoupledChainOptions& options) {
  const Vector& lambda = model.lambda();
  const PointMassMeasure mu = PointMassMeasure::dirac(pi);
  const PointMassMeasure nu = vertex_measure(pi, lambda);
  PushforwardOptions push;
  push.budget = options.budget;
  push.merge_tol = options.merge_tol;
  CouplingInequalityCheck out;
  out.n = cert.n;
  out.alpha = cert.alpha();
  out.distance =
      kantorovich(pushforward_measure(model, mu, cert.n, push), pushforward_measure(model, nu, cert.n, push), lambda)
          .distance;
  out.achieved_alpha = coupled_chain(model, mu, nu, cert.n, options).mass_within(cert.rho, lambda);
  out.bound = 2.0 - out.alpha * (2.0 - cert.rho);
  out.holds = out.distance <= out.bound + 1e-12;
  return out;
}

LipschitzFunction coordinate_function(std::size_t s, const Vector& lambda) {
  const double w = lambda(static_cast<Eigen::Index>(s));
  return {"x({" + std::to_string(s + 1) + "})",
          [s, w](const Density& x) { return x(static_cast<Eigen::Index>(s)) * w; }, 0.5, 1.0};
}

LipschitzFunction subset_function(const Subset& f, const Vector& lambda) {
  std::string name = "x({";
  for (std::size_t k = 0; k < f.size(); ++k) name += (k ? "," : "") + std::to_string(f[k] + 1);
  name += "})";
  return {name, [f, lambda](const Density& x) { return subset_mass(x, f, lambda); }, 0.5, 1.0};
}

LipschitzFunction distance_function(const Density& z, const Vector& lambda) {
  return {"||x - z||", [z, lambda](const Density& x) { return tv_distance(x, z, lambda); }, 1.0, 2.0};
}

LipschitzFunction max_coordinate_function(const Vector& lambda) {
  return {"max_s x({s})", [lambda](const Density& x) { return x.cwiseProduct(lambda).maxCoeff(); }, 0.5, 1.0};
}

LipschitzFunction constant_function(double c) {
  return {"constant", [c](const Density&) { return c; }, 0.0, std::abs(c)};
}

}  // namespace hmmerg
