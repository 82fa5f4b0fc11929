#include "hmmerg/contraction.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <sstream>

#include <Eigen/SVD>

#include "hmmerg/filter.hpp"
#include "hmmerg/measures.hpp"

namespace hmmerg {

namespace {

// Positive-entry pattern with the zero_tol rules applied.
std::vector<std::vector<char>> positive_pattern(const Matrix& k, double zero_tol) {
  std::vector<std::vector<char>> pos(static_cast<std::size_t>(k.rows()),
                                     std::vector<char>(static_cast<std::size_t>(k.cols()), 0));
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      const double v = k(i, j);
      if (v < -zero_tol || !std::isfinite(v))
        fail(ErrorCode::NonpositiveEntry, "negative kernel entry at (" + std::to_string(i) + "," +
                                              std::to_string(j) + ")");
      if (v > 0.0 && v <= zero_tol)
        fail(ErrorCode::HypothesisViolated, "entry " + std::to_string(v) + " at (" + std::to_string(i) + "," +
                                                std::to_string(j) + ") lies inside the zero tolerance");
      pos[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v > zero_tol ? 1 : 0;
    }
  return pos;
}

std::string join(std::span<const std::size_t> seq) {
  std::ostringstream os;
  for (std::size_t k = 0; k < seq.size(); ++k) os << (k ? "," : "") << seq[k];
  return os.str();
}

double singular_ratio(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() < 2) return 0.0;
  if (!(sv(0) > 0.0)) fail(ErrorCode::DegenerateProduct, "product vanishes");
  return sv(1) / sv(0);
}

void finish_kr(KrReport& report, double tol) {
  // Least-squares slope of log ratio over the positive ratios.
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < report.ratios.size(); ++k)
    if (report.ratios[k] > 1e-300) pts.emplace_back(static_cast<double>(k + 1), std::log(report.ratios[k]));
  if (pts.size() >= 2) {
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
    report.fitted_rate = std::exp(sxy / sxx);
  }
  std::size_t run = 0;
  for (double r : report.ratios) {
    run = r < tol ? run + 1 : 0;
    if (run >= 3) report.rank_one_approach = true;
  }
  if (report.rank_one_approach) {
    report.verdict = "rank-1 approach: sigma2/sigma1 below tol for 3 consecutive n";
  } else {
    report.verdict = "no rank-1 approach observed within the horizon (inconclusive)";
  }
}

}  // namespace

std::optional<RectSupport> rectangular_support(const Matrix& kernel, double zero_tol) {
  const auto pos = positive_pattern(kernel, zero_tol);
  RectSupport rect;
  for (std::size_t i = 0; i < pos.size(); ++i)
    if (std::find(pos[i].begin(), pos[i].end(), 1) != pos[i].end()) rect.rows.push_back(i);
  for (std::size_t j = 0; j < static_cast<std::size_t>(kernel.cols()); ++j)
    for (std::size_t i = 0; i < pos.size(); ++i)
      if (pos[i][j]) {
        rect.cols.push_back(j);
        break;
      }
  if (rect.rows.empty()) return std::nullopt;
  for (std::size_t i : rect.rows)
    for (std::size_t j : rect.cols)
      if (!pos[i][j]) return std::nullopt;
  return rect;
}

SubrectangularCheck is_subrectangular(const Matrix& matrix, double zero_tol) {
  const auto pos = positive_pattern(matrix, zero_tol);
  std::vector<std::pair<std::size_t, std::size_t>> positive;
  for (std::size_t i = 0; i < pos.size(); ++i)
    for (std::size_t j = 0; j < pos[i].size(); ++j)
      if (pos[i][j]) positive.emplace_back(i, j);
  SubrectangularCheck out;
  out.zero = positive.empty();
  out.value = true;
  for (const auto& [i1, j1] : positive)
    for (const auto& [i2, j2] : positive)
      if (!pos[i1][j2] || !pos[i2][j1]) {
        out.value = false;
        return out;
      }
  return out;
}

ConditionAResult check_condition_A(const HmmModel& model, std::size_t max_len, std::size_t budget,
                                   double zero_tol) {
  ConditionAResult out;
  const std::size_t na = model.num_obs();
  struct Node {
    std::vector<std::size_t> seq;
    Matrix product;
  };
  std::vector<Node> level;
  level.push_back({{}, Matrix::Identity(static_cast<Eigen::Index>(model.num_states()),
                                        static_cast<Eigen::Index>(model.num_states()))});
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<Node> next;
    next.reserve(level.size() * na);
    for (const auto& node : level) {
      for (std::size_t a = 0; a < na; ++a) {
        if (++out.products_examined > budget)
          fail(ErrorCode::BudgetExceeded, "Condition A search exceeded " + std::to_string(budget) + " products");
        Node child{node.seq, node.product * model.stepping(a)};
        child.seq.push_back(a);
        const double scale = child.product.cwiseAbs().maxCoeff();
        if (scale > 0.0) {
          if (is_subrectangular(child.product, zero_tol).value) {
            out.witness = child.seq;
            return out;
          }
          // Only nonzero products can extend to a nonzero witness.
          child.product /= scale;
          next.push_back(std::move(child));
        }
      }
    }
    level = std::move(next);
    if (level.empty()) break;
  }
  out.inconclusive = true;
  return out;
}

KrReport check_condition_KR(std::span<const Matrix> factors, double tol) {
  KrReport report;
  if (factors.empty()) fail(ErrorCode::InvalidArgument, "empty product");
  Matrix prod = factors.front();
  for (std::size_t k = 0; k < factors.size(); ++k) {
    if (k > 0) prod = prod * factors[k];
    const double scale = prod.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) fail(ErrorCode::DegenerateProduct, "product vanishes at n = " + std::to_string(k + 1));
    prod /= scale;
    report.ratios.push_back(singular_ratio(prod));
  }
  finish_kr(report, tol);
  return report;
}

KrReport check_condition_KR(const HmmModel& model, std::span<const std::size_t> sequence, double tol) {
  std::vector<Matrix> factors;
  for (std::size_t a : sequence) factors.push_back(stepping_kernel(model, a));
  KrReport report = check_condition_KR(factors, tol);
  report.sequence.assign(sequence.begin(), sequence.end());
  return report;
}

KrReport check_condition_KR_search(const HmmModel& model, std::size_t depth, double tol) {
  KrReport report;
  const auto ns = static_cast<Eigen::Index>(model.num_states());
  Matrix prod = Matrix::Identity(ns, ns);
  for (std::size_t step = 0; step < depth; ++step) {
    std::optional<std::size_t> best;
    double best_ratio = 2.0;
    Matrix best_prod;
    for (std::size_t a = 0; a < model.num_obs(); ++a) {
      Matrix cand = prod * model.stepping(a);
      const double scale = cand.cwiseAbs().maxCoeff();
      if (!(scale > 0.0)) continue;
      cand /= scale;
      const double r = singular_ratio(cand);
      if (r < best_ratio) {
        best_ratio = r;
        best = a;
        best_prod = std::move(cand);
      }
    }
    if (!best) fail(ErrorCode::DegenerateProduct, "every extension of the product vanishes");
    report.sequence.push_back(*best);
    report.ratios.push_back(best_ratio);
    prod = std::move(best_prod);
  }
  finish_kr(report, tol);
  return report;
}

double cross_ratio_kappa_exhaustive(const Matrix& k, const Subset& rows, const Subset& cols) {
  double best = 1.0;
  for (std::size_t s1 : rows)
    for (std::size_t s2 : rows)
      for (std::size_t t1 : cols)
        for (std::size_t t2 : cols) {
          const auto S1 = static_cast<Eigen::Index>(s1), S2 = static_cast<Eigen::Index>(s2);
          const auto T1 = static_cast<Eigen::Index>(t1), T2 = static_cast<Eigen::Index>(t2);
          best = std::max(best, (k(S1, T1) * k(S2, T2)) / (k(S2, T1) * k(S1, T2)));
        }
  return std::sqrt(best);
}

double cross_ratio_kappa_reduced(const Matrix& k, const Subset& rows, const Subset& cols) {
  double best = 1.0;
  for (std::size_t t1 : cols)
    for (std::size_t t2 : cols) {
      double hi = 0.0, lo = std::numeric_limits<double>::infinity();
      for (std::size_t s : rows) {
        const auto S = static_cast<Eigen::Index>(s);
        const double r = k(S, static_cast<Eigen::Index>(t1)) / k(S, static_cast<Eigen::Index>(t2));
        hi = std::max(hi, r);
        lo = std::min(lo, r);
      }
      best = std::max(best, hi / lo);
    }
  return std::sqrt(best);
}

double cross_ratio_kappa(const Matrix& kernel, const Subset& rows, const Subset& cols) {
  if (rows.empty() || cols.empty()) fail(ErrorCode::InvalidArgument, "empty support");
  for (std::size_t s : rows)
    for (std::size_t t : cols) {
      if (s >= static_cast<std::size_t>(kernel.rows()) || t >= static_cast<std::size_t>(kernel.cols()))
        fail(ErrorCode::InvalidArgument, "support index out of range");
      if (!(kernel(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) > 0.0))
        fail(ErrorCode::NonpositiveEntry, "kernel vanishes at (" + std::to_string(s) + "," + std::to_string(t) +
                                              ") inside the support");
    }
  if (rows.size() * cols.size() <= 64 * 64) return cross_ratio_kappa_exhaustive(kernel, rows, cols);
  return cross_ratio_kappa_reduced(kernel, rows, cols);
}

double hopf_bound(std::span<const double> kappas) {
  double prod = 2.0;
  for (double kappa : kappas) {
    if (!(kappa >= 1.0 - 1e-12)) fail(ErrorCode::KappaBelowOne, "kappa = " + std::to_string(kappa));
    const double k = std::max(kappa, 1.0);
    prod *= (k - 1.0) / (k + 1.0);
  }
  return prod;
}

HopfCheck verify_hopf(std::span<const Matrix> kernels, const Vector& lambda, const Density& x, const Density& y,
                      double zero_tol) {
  if (kernels.empty()) fail(ErrorCode::InvalidArgument, "no kernels");
  HopfCheck out;
  for (std::size_t m = 0; m < kernels.size(); ++m) {
    auto rect = rectangular_support(kernels[m], zero_tol);
    if (!rect) fail(ErrorCode::HypothesisViolated, "kernel " + std::to_string(m + 1) + " lacks rectangular support");
    out.kappas.push_back(cross_ratio_kappa(kernels[m], rect->rows, rect->cols));
    out.supports.push_back(std::move(*rect));
  }
  const Subset& f1 = out.supports.front().rows;
  if (!(subset_mass(x, f1, lambda) > 0.0)) fail(ErrorCode::HypothesisViolated, "x(F_1) = 0");
  if (!(subset_mass(y, f1, lambda) > 0.0)) fail(ErrorCode::HypothesisViolated, "y(F_1) = 0");

  // K^n(s, S) > 0 on F_1: push each vertex of F_1 through the product.
  auto push_all = [&](Density z) {
    for (const Matrix& k : kernels) {
      const Vector mass = z.cwiseProduct(lambda);
      z = k.transpose() * mass;
    }
    return z;
  };
  for (std::size_t s : f1) {
    if (!(total_mass(push_all(vertex(s, lambda)), lambda) > 0.0))
      fail(ErrorCode::HypothesisViolated, "K^n(s,S) = 0 for s = " + std::to_string(s));
  }
  const Density xk = push_all(x);
  const Density yk = push_all(y);
  out.achieved = tv_distance(xk / total_mass(xk, lambda), yk / total_mass(yk, lambda), lambda);
  out.bound = hopf_bound(out.kappas);
  out.holds = out.achieved <= out.bound + 1e-12;
  return out;
}

OscStep birkhoff_osc_step(const Matrix& kernel, const Vector& lambda, const Vector& u, const Vector& v,
                          const Subset& rows, const Subset& cols) {
  OscStep out;
  out.kappa = cross_ratio_kappa(kernel, rows, cols);
  const Vector u1 = kernel * u.cwiseProduct(lambda);
  const Vector v1 = kernel * v.cwiseProduct(lambda);
  double hi = -std::numeric_limits<double>::infinity(), lo = std::numeric_limits<double>::infinity();
  for (std::size_t s : rows) {
    const auto S = static_cast<Eigen::Index>(s);
    if (!(u1(S) > 0.0)) fail(ErrorCode::DivisionByZeroMass, "u1 vanishes at s = " + std::to_string(s));
    hi = std::max(hi, v1(S) / u1(S));
    lo = std::min(lo, v1(S) / u1(S));
  }
  out.lhs = hi - lo;
  hi = -std::numeric_limits<double>::infinity();
  lo = std::numeric_limits<double>::infinity();
  for (std::size_t t : cols) {
    const auto T = static_cast<Eigen::Index>(t);
    if (!(u(T) > 0.0)) {
      if (v(T) > 0.0) fail(ErrorCode::DivisionByZeroMass, "v/u unbounded at t = " + std::to_string(t));
      continue;
    }
    hi = std::max(hi, v(T) / u(T));
    lo = std::min(lo, v(T) / u(T));
  }
  const double osc_g = hi >= lo ? hi - lo : 0.0;
  out.rhs = (out.kappa - 1.0) / (out.kappa + 1.0) * osc_g;
  out.holds = out.lhs <= out.rhs + 1e-12 * (1.0 + osc_g);
  return out;
}

PCheck check_condition_P(const HmmModel& model, const Density& pi, const Subset& f0, const Subset& b0) {
  const Vector& lambda = model.lambda();
  for (std::size_t s : f0)
    if (s >= model.num_states()) fail(ErrorCode::InvalidArgument, "F0 index out of range");
  for (std::size_t a : b0)
    if (a >= model.num_obs()) fail(ErrorCode::UnknownObservation, "B0 index out of range");

  if (!(subset_mass(pi, f0, lambda) > 0.0)) return PViolation{"1", "pi(F0) = 0", {}, {}, {}};
  if (!(model.obs().measure(b0) > 0.0)) return PViolation{"2", "tau(B0) = 0", {}, {}, {}};

  std::vector<char> in_f0(model.num_states(), 0);
  for (std::size_t s : f0) in_f0[s] = 1;

  PCertificate cert;
  cert.f0 = f0;
  cert.b0 = b0;
  cert.d0 = std::numeric_limits<double>::infinity();
  cert.big_d0 = 0.0;
  cert.beta0 = std::numeric_limits<double>::infinity();
  for (std::size_t a : b0) {
    Subset f1;
    for (std::size_t t = 0; t < model.num_states(); ++t) {
      bool positive = false;
      for (std::size_t s : f0) positive |= model.density(s, t, a) > 0.0;
      if (!positive) continue;
      if (!in_f0[t])
        return PViolation{"3a", "F1(a) leaves F0: m(s,t,a) > 0 with t outside F0", a, std::nullopt, t};
      f1.push_back(t);
    }
    if (f1.empty()) return PViolation{"3b", "F1(a) is empty", a, {}, {}};
    for (std::size_t s : f0)
      for (std::size_t t : f1) {
        const double v = model.density(s, t, a);
        if (!(v > 0.0)) return PViolation{"3c", "m(s,t,a) = 0 inside F0 x F1(a)", a, s, t};
        cert.d0 = std::min(cert.d0, v);
        cert.big_d0 = std::max(cert.big_d0, v);
      }
    cert.beta0 = std::min(cert.beta0, model.states().measure(f1));
    cert.f1.emplace_back(a, std::move(f1));
  }
  return cert;
}

std::size_t e1_horizon(double kappa, double rho) {
  if (!(rho > 0.0)) fail(ErrorCode::InvalidArgument, "rho must be positive");
  if (!(kappa >= 1.0 - 1e-12)) fail(ErrorCode::KappaBelowOne, "kappa = " + std::to_string(kappa));
  const double r = (std::max(kappa, 1.0) - 1.0) / (std::max(kappa, 1.0) + 1.0);
  double bound = 2.0 * r;
  std::size_t n = 1;
  while (!(bound < rho)) {
    if (++n > 100'000'000) fail(ErrorCode::CertificateInvalid, "N does not exist within 1e8 steps");
    bound *= r;
  }
  return n;
}

namespace {

// Point of K0 = {x : x(F0) >= threshold} derived from z by mixing toward the
// uniform law on F0 when z falls short.
Density into_k0(const Density& z, const Subset& f0, double threshold, const Vector& lambda) {
  const double zf = subset_mass(z, f0, lambda);
  if (zf >= threshold) return z;
  Density u = Density::Zero(z.size());
  const double lf = [&] {
    double total = 0.0;
    for (std::size_t s : f0) total += lambda(static_cast<Eigen::Index>(s));
    return total;
  }();
  for (std::size_t s : f0) u(static_cast<Eigen::Index>(s)) = 1.0 / lf;
  const double t = (1.0 - threshold) / (1.0 - zf);
  return t * z + (1.0 - t) * u;
}

}  // namespace

E1Result e1_constants(const HmmModel& model, const Density& pi, const PCertificate& cert, double rho,
                      const E1VerifyOptions& options) {
  if (!(rho > 0.0) || rho > 2.0) fail(ErrorCode::InvalidArgument, "rho must lie in (0, 2]");
  if (!(cert.d0 > 0.0) || cert.d0 > cert.big_d0 || !(cert.beta0 > 0.0) || cert.f0.empty() || cert.b0.empty())
    fail(ErrorCode::CertificateInvalid, "certificate constants are inconsistent");
  const Vector& lambda = model.lambda();
  for (const auto& [a, f1] : cert.f1)
    for (std::size_t s : cert.f0)
      for (std::size_t t : f1) {
        const double v = model.density(s, t, a);
        if (v < cert.d0 * (1.0 - 1e-12) || v > cert.big_d0 * (1.0 + 1e-12))
          fail(ErrorCode::CertificateInvalid, "m(s,t,a) outside [d0, D0]");
      }
  const double pf = subset_mass(pi, cert.f0, lambda);
  if (!(pf > 0.0)) fail(ErrorCode::CertificateInvalid, "pi(F0) = 0");

  E1Result out;
  E1Certificate& c = out.certificate;
  c.rho = rho;
  c.kappa = cert.big_d0 / cert.d0;
  c.n = e1_horizon(c.kappa, rho);
  c.f0 = cert.f0;
  c.k0_threshold = pf / 2.0;
  c.xi = pf / 2.0;
  c.beta = std::pow(model.obs().measure(cert.b0), static_cast<double>(c.n));
  c.eta = (pf / 2.0) * std::pow(cert.d0, static_cast<double>(c.n)) * std::pow(cert.beta0, static_cast<double>(c.n));

  // Sequences in B0^N: all of them when few, otherwise a seeded sample.
  std::mt19937_64 rng(options.seed);
  std::vector<std::vector<std::size_t>> sequences;
  const double count = std::pow(static_cast<double>(cert.b0.size()), static_cast<double>(c.n));
  E1Verification& ver = out.verification;
  if (count <= static_cast<double>(options.exhaustive_limit)) {
    ver.exhaustive_sequences = true;
    std::vector<std::size_t> digits(c.n, 0);
    while (true) {
      std::vector<std::size_t> seq(c.n);
      for (std::size_t k = 0; k < c.n; ++k) seq[k] = cert.b0[digits[k]];
      sequences.push_back(std::move(seq));
      std::size_t pos = c.n;
      while (pos > 0 && ++digits[pos - 1] == cert.b0.size()) digits[--pos] = 0;
      if (pos == 0) break;
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, cert.b0.size() - 1);
    for (std::size_t k = 0; k < options.sampled_sequences; ++k) {
      std::vector<std::size_t> seq(c.n);
      for (auto& a : seq) a = cert.b0[pick(rng)];
      sequences.push_back(std::move(seq));
    }
  }

  // Deterministic extremes first: vertices of F0 and threshold mixes with
  // outside vertices; then seeded interior samples.
  std::vector<Density> points;
  for (std::size_t s : cert.f0) points.push_back(vertex(s, lambda));
  for (std::size_t s = 0; s < model.num_states(); ++s)
    if (std::find(cert.f0.begin(), cert.f0.end(), s) == cert.f0.end())
      points.push_back(into_k0(vertex(s, lambda), cert.f0, c.k0_threshold, lambda));
  while (points.size() < 2 * options.pairs)
    points.push_back(into_k0(sample_simplex(lambda, rng), cert.f0, c.k0_threshold, lambda));

  auto propagate = [&](const Density& x, const std::vector<std::size_t>& seq) {
    Density z = x;
    for (std::size_t a : seq) z = push_density(z, model.stepping(a), lambda);
    return z;
  };

  ver.min_likelihood = std::numeric_limits<double>::infinity();
  ver.pairs = options.pairs;
  ver.sequences = sequences.size();
  for (std::size_t p = 0; p < options.pairs; ++p) {
    const Density& x = points[(2 * p) % points.size()];
    const Density& y = points[(2 * p + 1) % points.size()];
    for (const auto& seq : sequences) {
      const Density xm = propagate(x, seq);
      const Density ym = propagate(y, seq);
      const double gx = total_mass(xm, lambda);
      const double gy = total_mass(ym, lambda);
      ver.min_likelihood = std::min({ver.min_likelihood, gx, gy});
      for (double g : {gx, gy})
        if (g < c.eta * (1.0 - 1e-12)) {
          if (ver.first_counterexample.empty())
            ver.first_counterexample = "g^(N) = " + std::to_string(g) + " < eta on sequence " + join(seq);
          ++ver.likelihood_counterexamples;
        }
      if (gx > 0.0 && gy > 0.0) {
        const double d = tv_distance(xm / gx, ym / gy, lambda);
        ver.max_distance = std::max(ver.max_distance, d);
        if (!(d < rho)) {
          if (ver.first_counterexample.empty())
            ver.first_counterexample = "||h^(N)(x) - h^(N)(y)|| = " + std::to_string(d) + " >= rho on sequence " +
                                       join(seq);
          ++ver.contraction_counterexamples;
        }
      }
    }
  }
  return out;
}

}  // namespace hmmerg
