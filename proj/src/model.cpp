#include "hmmerg/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <Eigen/Eigenvalues>

namespace hmmerg {

CellSpace::CellSpace(std::vector<std::string> ids, Vector weights)
    : ids_(std::move(ids)), weights_(std::move(weights)) {
  if (ids_.empty()) fail(ErrorCode::InvalidArgument, "a cell space needs at least one cell");
  if (static_cast<std::size_t>(weights_.size()) != ids_.size())
    fail(ErrorCode::InvalidArgument, "cell ids and weights differ in length");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!seen.insert(ids_[i]).second)
      fail(ErrorCode::InvalidArgument, "duplicate cell id '" + ids_[i] + "'");
    const double w = weights_(static_cast<Eigen::Index>(i));
    if (!(w > 0.0) || !std::isfinite(w))
      fail(ErrorCode::InvalidArgument, "cell '" + ids_[i] + "' has non-positive weight");
  }
}

CellSpace CellSpace::counting(std::size_t n) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i + 1));
  return CellSpace(std::move(ids), Vector::Ones(static_cast<Eigen::Index>(n)));
}

std::optional<std::size_t> CellSpace::index_of(const std::string& id) const {
  auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids_.begin());
}

double CellSpace::measure(std::span<const std::size_t> subset) const {
  double total = 0.0;
  for (std::size_t i : subset) total += weight(i);
  return total;
}

bool CellSpace::operator==(const CellSpace& other) const {
  return ids_ == other.ids_ && weights_.size() == other.weights_.size() &&
         weights_ == other.weights_;
}

HmmModel build_model(const ModelSpec& spec) {
  const auto ns = static_cast<Eigen::Index>(spec.states.size());
  const std::size_t na = spec.obs.size();
  if (ns == 0 || na == 0) fail(ErrorCode::InvalidArgument, "empty state or observation space");
  if (spec.m.size() != na)
    fail(ErrorCode::InvalidArgument, "density tensor has " + std::to_string(spec.m.size()) +
                                         " observation slices, expected " + std::to_string(na));
  for (std::size_t a = 0; a < na; ++a) {
    const Matrix& slice = spec.m[a];
    if (slice.rows() != ns || slice.cols() != ns)
      fail(ErrorCode::InvalidArgument, "density slice for observation '" + spec.obs.ids()[a] +
                                           "' is not |S| x |S|");
    for (Eigen::Index s = 0; s < ns; ++s)
      for (Eigen::Index t = 0; t < ns; ++t) {
        const double v = slice(s, t);
        if (!std::isfinite(v) || v < 0.0)
          fail(ErrorCode::NegativeDensity,
               "m(" + spec.states.ids()[s] + "," + spec.states.ids()[t] + "," +
                   spec.obs.ids()[a] + ") = " + std::to_string(v));
      }
  }

  const Vector& lambda = spec.states.weights();
  const Vector& tau = spec.obs.weights();

  HmmModel model;
  model.states_ = spec.states;
  model.obs_ = spec.obs;
  model.m_ = spec.m;

  for (Eigen::Index s = 0; s < ns; ++s) {
    double row = 0.0;
    for (std::size_t a = 0; a < na; ++a)
      row += spec.m[a].row(s).dot(lambda) * tau(static_cast<Eigen::Index>(a));
    const double deviation = std::abs(row - 1.0);
    if (deviation > kStochasticTolerance)
      fail(ErrorCode::NonStochastic, "row '" + spec.states.ids()[s] + "' integrates to " +
                                         std::to_string(row));
    model.residual_ = std::max(model.residual_, deviation);
    for (auto& slice : model.m_) slice.row(s) /= row;
  }

  model.markov_ = Matrix::Zero(ns, ns);
  model.stepping_.reserve(na);
  for (std::size_t a = 0; a < na; ++a) {
    Matrix step = model.m_[a] * lambda.asDiagonal();
    model.markov_ += tau(static_cast<Eigen::Index>(a)) * step;
    model.stepping_.push_back(std::move(step));
  }
  return model;
}

Matrix stepping_kernel(const HmmModel& model, std::size_t a) {
  if (a >= model.num_obs())
    fail(ErrorCode::UnknownObservation, "observation index " + std::to_string(a));
  return model.stepping(a);
}

Matrix stepping_kernel(const HmmModel& model, const std::string& obs_id) {
  auto a = model.obs().index_of(obs_id);
  if (!a) fail(ErrorCode::UnknownObservation, "observation '" + obs_id + "'");
  return model.stepping(*a);
}

Matrix markov_kernel(const HmmModel& model) { return model.markov(); }

HmmModel compose(const HmmModel& first, const HmmModel& second) {
  if (!(first.states() == second.states()))
    fail(ErrorCode::StateSpaceMismatch, "composition needs identical state spaces");
  const Vector& lambda = first.lambda();
  const std::size_t n1 = first.num_obs();
  const std::size_t n2 = second.num_obs();

  std::vector<std::string> ids;
  Vector tau(static_cast<Eigen::Index>(n1 * n2));
  ModelSpec spec;
  spec.states = first.states();
  spec.m.reserve(n1 * n2);
  for (std::size_t a1 = 0; a1 < n1; ++a1) {
    const Matrix left = first.density_slice(a1) * lambda.asDiagonal();
    for (std::size_t a2 = 0; a2 < n2; ++a2) {
      ids.push_back(first.obs().ids()[a1] + "," + second.obs().ids()[a2]);
      tau(static_cast<Eigen::Index>(a1 * n2 + a2)) = first.obs().weight(a1) * second.obs().weight(a2);
      spec.m.push_back(left * second.density_slice(a2));
    }
  }
  spec.obs = ObsSpace(std::move(ids), std::move(tau));
  return build_model(spec);
}

HmmModel iterate(const HmmModel& model, std::size_t n, std::size_t max_obs) {
  if (n == 0) fail(ErrorCode::InvalidArgument, "iterate needs N >= 1");
  double count = 1.0;
  for (std::size_t i = 0; i < n; ++i) count *= static_cast<double>(model.num_obs());
  if (count > static_cast<double>(max_obs))
    fail(ErrorCode::BudgetExceeded, "|A|^N = " + std::to_string(count) + " observation sequences");
  HmmModel result = model;
  for (std::size_t i = 1; i < n; ++i) result = compose(result, model);
  return result;
}

Vector to_mass(const Density& x, const Vector& lambda) { return x.cwiseProduct(lambda); }

Density to_density(const Vector& mass, const Vector& lambda) { return mass.cwiseQuotient(lambda); }

double total_mass(const Density& x, const Vector& lambda) { return x.dot(lambda); }

Density vertex(std::size_t s, const Vector& lambda) {
  Density x = Density::Zero(lambda.size());
  x(static_cast<Eigen::Index>(s)) = 1.0 / lambda(static_cast<Eigen::Index>(s));
  return x;
}

Density uniform_density(const Vector& lambda) {
  return Density::Constant(lambda.size(), 1.0 / lambda.sum());
}

Density push_density(const Density& x, const Matrix& kernel, const Vector& lambda) {
  const Vector mass = kernel.transpose() * x.cwiseProduct(lambda);
  return mass.cwiseQuotient(lambda);
}

namespace {

bool has_unit_circle_eigenvalue(const Matrix& p) {
  Eigen::EigenSolver<Matrix> solver(p, false);
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const std::complex<double> mu = solver.eigenvalues()(i);
    if (std::abs(mu) > 1.0 - 1e-9 && std::abs(mu - 1.0) > 1e-6) return true;
  }
  return false;
}

}  // namespace

StationaryResult stationary(const HmmModel& model, double tol, std::size_t power_horizon,
                            std::size_t report_horizon) {
  const Matrix& p = model.markov();
  const auto ns = p.rows();
  // The lazy chain (I + P)/2 has the same invariant laws and no period.
  Vector w = Vector::Constant(ns, 1.0 / static_cast<double>(ns));
  StationaryResult out;
  double residual = (p.transpose() * w - w).lpNorm<1>();
  std::size_t it = 0;
  while (residual > tol && it < power_horizon) {
    w = 0.5 * (w + p.transpose() * w);
    w /= w.sum();
    residual = (p.transpose() * w - w).lpNorm<1>();
    ++it;
  }
  out.report.power_iterations = it;
  out.report.stationarity_residual = residual;
  out.report.pi_converged = residual <= tol;
  out.pi = to_density(w, model.lambda());

  Matrix pn = Matrix::Identity(ns, ns);
  for (std::size_t n = 0; n <= report_horizon; ++n) {
    double sup = 0.0;
    for (Eigen::Index s = 0; s < ns; ++s)
      sup = std::max(sup, (pn.row(s).transpose() - w).lpNorm<1>());
    out.report.sup_tv.push_back(sup);
    if (sup < tol) {
      out.report.ergodic = true;
      out.report.mixing_n = n;
      break;
    }
    pn = pn * p;
  }

  if (out.report.ergodic) {
    out.report.verdict = "strongly ergodic: sup_s ||P^n(s,.) - pi|| < tol at n = " +
                         std::to_string(*out.report.mixing_n);
  } else {
    out.report.periodic_suspected = has_unit_circle_eigenvalue(p);
    out.report.verdict = out.report.periodic_suspected
                             ? "NoConvergence: periodic chain (unit-modulus eigenvalue != 1)"
                             : "NoConvergence: no decay below tol within the horizon";
  }
  return out;
}

SimulatedPath simulate(const HmmModel& model, const Density& x0, std::size_t n,
                       std::uint64_t seed) {
  if (n == 0) fail(ErrorCode::InvalidArgument, "simulate needs n >= 1");
  if (static_cast<std::size_t>(x0.size()) != model.num_states())
    fail(ErrorCode::SpaceMismatch, "initial density has wrong dimension");
  const std::size_t ns = model.num_states();
  const std::size_t na = model.num_obs();

  std::mt19937_64 rng(seed);
  const Vector w0 = to_mass(x0, model.lambda());
  std::discrete_distribution<std::size_t> initial(w0.data(), w0.data() + w0.size());

  std::vector<std::discrete_distribution<std::size_t>> joint;
  joint.reserve(ns);
  std::vector<double> probs(ns * na);
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t t = 0; t < ns; ++t)
      for (std::size_t a = 0; a < na; ++a)
        probs[t * na + a] = model.density(s, t, a) * model.states().weight(t) * model.obs().weight(a);
    joint.emplace_back(probs.begin(), probs.end());
  }

  SimulatedPath path;
  path.initial_state = initial(rng);
  path.steps.reserve(n);
  std::size_t s = path.initial_state;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t cell = joint[s](rng);
    const PathStep step{cell / na, cell % na};
    path.steps.push_back(step);
    s = step.state;
  }
  return path;
}

}  // namespace hmmerg
