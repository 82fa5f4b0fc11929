#include "hmmerg/commands.hpp"

#include <algorithm>
#include <cmath>

namespace hmmerg {

namespace {

int worse(int a, int b) {
  if (a == kVerdictViolated || b == kVerdictViolated) return kVerdictViolated;
  if (a == kVerdictInconclusive || b == kVerdictInconclusive) return kVerdictInconclusive;
  return kVerdictPass;
}

std::vector<Density> vertices(const Vector& lambda) {
  std::vector<Density> out;
  for (Eigen::Index s = 0; s < lambda.size(); ++s) out.push_back(vertex(static_cast<std::size_t>(s), lambda));
  return out;
}

Subset column_support(const Matrix& k) {
  Subset cols;
  for (Eigen::Index t = 0; t < k.cols(); ++t)
    if ((k.col(t).array() > 0.0).any()) cols.push_back(static_cast<std::size_t>(t));
  return cols;
}

PushforwardOptions push_options(const CommandOptions& options) {
  PushforwardOptions push;
  push.budget = options.budget;
  return push;
}

std::optional<PCertificate> resolve_P(const HmmModel& model, const Density& pi, const CommandOptions& options,
                                      Json& section) {
  if (options.f0 || options.b0) {
    const Subset f0 = options.f0.value_or(Subset{});
    Subset b0 = options.b0.value_or(Subset{});
    if (!options.b0)
      for (std::size_t a = 0; a < model.num_obs(); ++a) b0.push_back(a);
    if (f0.empty()) fail(ErrorCode::InvalidArgument, "F0 must be given together with B0");
    const PCheck check = check_condition_P(model, pi, f0, b0);
    section["source"] = "user";
    if (const auto* v = std::get_if<PViolation>(&check)) {
      section["violation"] = to_json(*v, model);
      return std::nullopt;
    }
    section["certificate"] = to_json(std::get<PCertificate>(check), model);
    return std::get<PCertificate>(check);
  }
  std::vector<PViolation> rejected;
  auto cert = search_condition_P(model, pi, &rejected);
  section["source"] = "search";
  Json rej = Json::array();
  for (const auto& v : rejected) rej.push_back(to_json(v, model));
  section["rejected"] = std::move(rej);
  section["certificate"] = cert ? to_json(*cert, model) : Json();
  return cert;
}

}  // namespace

std::optional<PCertificate> search_condition_P(const HmmModel& model, const Density& pi,
                                               std::vector<PViolation>* rejected) {
  std::vector<std::pair<Subset, Subset>> candidates;
  Subset all_s, all_a;
  for (std::size_t s = 0; s < model.num_states(); ++s) all_s.push_back(s);
  for (std::size_t a = 0; a < model.num_obs(); ++a) all_a.push_back(a);
  candidates.emplace_back(all_s, all_a);
  for (std::size_t a = 0; a < model.num_obs(); ++a) {
    Subset f0 = column_support(model.density_slice(a));
    if (!f0.empty()) candidates.emplace_back(std::move(f0), Subset{a});
  }
  std::optional<PCertificate> best;
  for (const auto& [f0, b0] : candidates) {
    const PCheck check = check_condition_P(model, pi, f0, b0);
    if (const auto* v = std::get_if<PViolation>(&check)) {
      if (rejected) rejected->push_back(*v);
      continue;
    }
    const auto& cert = std::get<PCertificate>(check);
    if (!best || cert.big_d0 / cert.d0 < best->big_d0 / best->d0 - 1e-15 ||
        (std::abs(cert.big_d0 / cert.d0 - best->big_d0 / best->d0) <= 1e-15 && cert.d0 > best->d0))
      best = cert;
  }
  return best;
}

CommandResult run_check(const HmmModel& model, const CommandOptions& options) {
  CommandResult out;
  const auto st = stationary(model);
  out.report["stationary"] = {{"pi", vector_json(st.pi)}, {"report", to_json(st.report)}};

  bool positive = false;
  int verdict = kVerdictPass;
  try {
    const auto a = check_condition_A(model, options.nmax, options.budget);
    out.report["condition_A"] = to_json(a, model.obs());
    positive = positive || a.witness.has_value();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BudgetExceeded) throw;
    out.report["condition_A"] = {{"error", e.what()}};
    verdict = worse(verdict, kVerdictInconclusive);
  }
  try {
    const auto kr = check_condition_KR_search(model, std::max<std::size_t>(options.nmax, 10));
    out.report["condition_KR"] = to_json(kr, model.obs());
    positive = positive || kr.rank_one_approach;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateProduct) throw;
    out.report["condition_KR"] = {{"error", e.what()}};
  }

  Json p_section = Json::object();
  const auto cert = resolve_P(model, st.pi, options, p_section);
  out.report["condition_P"] = std::move(p_section);
  if (cert) {
    positive = true;
    E1VerifyOptions vopt;
    vopt.seed = options.seed;
    const auto e1 = e1_constants(model, st.pi, *cert, options.rho, vopt);
    out.report["condition_E1"] = to_json(e1, model);
    if (!e1.verification.passed()) verdict = worse(verdict, kVerdictViolated);
  } else {
    out.report["condition_E1"] = nullptr;
  }
  if (!positive) verdict = worse(verdict, kVerdictInconclusive);
  out.verdict = verdict;
  out.report["verdict"] = verdict;
  return out;
}

CommandResult run_contract(const HmmModel& model, const CommandOptions& options) {
  CommandResult out;
  const Vector& lambda = model.lambda();
  std::mt19937_64 rng(options.seed);
  std::vector<std::vector<std::size_t>> sequences;
  for (std::size_t a = 0; a < model.num_obs(); ++a) sequences.push_back({a});
  if (model.num_obs() * model.num_obs() <= 64)
    for (std::size_t a = 0; a < model.num_obs(); ++a)
      for (std::size_t b = 0; b < model.num_obs(); ++b) sequences.push_back({a, b});

  Json rows = Json::array();
  Json certificates = Json::array();
  std::size_t applicable = 0;
  bool violated = false;
  for (const auto& seq : sequences) {
    std::vector<Matrix> kernels;
    for (std::size_t a : seq) kernels.push_back(model.density_slice(a));
    auto rect = rectangular_support(kernels.front());
    std::string seq_name;
    for (std::size_t k = 0; k < seq.size(); ++k) seq_name += (k ? "," : "") + model.obs().ids()[seq[k]];
    Json cert{{"sequence", seq_name}};
    if (!rect) {
      cert["applicable"] = false;
      cert["reason"] = "first kernel lacks rectangular support";
      certificates.push_back(std::move(cert));
      continue;
    }
    std::vector<Density> points;
    for (std::size_t s : rect->rows) points.push_back(vertex(s, lambda));
    for (int k = 0; k < 8; ++k) {
      Density x = sample_simplex(lambda, rng);
      if (subset_mass(x, rect->rows, lambda) > 0.0) points.push_back(std::move(x));
    }
    double worst_gap = -std::numeric_limits<double>::infinity();
    std::optional<HopfCheck> sample;
    try {
      for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j) {
          const HopfCheck h = verify_hopf(kernels, lambda, points[i], points[j]);
          if (!sample) sample = h;
          worst_gap = std::max(worst_gap, h.achieved - h.bound);
          if (!h.holds) violated = true;
          rows.push_back({{"sequence", seq_name}, {"i", i}, {"j", j}, {"achieved", h.achieved},
                          {"bound", h.bound}, {"holds", h.holds}});
        }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::HypothesisViolated && e.code() != ErrorCode::NonpositiveEntry) throw;
      cert["applicable"] = false;
      cert["reason"] = e.what();
      certificates.push_back(std::move(cert));
      continue;
    }
    ++applicable;
    cert["applicable"] = true;
    cert["F"] = subset_json(rect->rows, model.states());
    cert["G"] = subset_json(rect->cols, model.states());
    if (sample) {
      cert["kappas"] = to_json(*sample)["kappas"];
      cert["bound"] = sample->bound;
    }
    cert["pairs"] = points.size() * (points.size() - 1) / 2;
    cert["worst_achieved_minus_bound"] = points.size() > 1 ? Json(worst_gap) : Json();
    certificates.push_back(std::move(cert));
  }
  out.report["certificates"] = std::move(certificates);
  out.report["tolerance"] = 1e-12;
  out.tables["hopf"] = std::move(rows);
  out.verdict = violated ? kVerdictViolated : (applicable == 0 ? kVerdictInconclusive : kVerdictPass);
  out.report["verdict"] = out.verdict;
  return out;
}

CommandResult run_ergodics(const HmmModel& model, const CommandOptions& options) {
  CommandResult out;
  const Vector& lambda = model.lambda();
  const auto st = stationary(model);
  out.report["stationary"] = {{"pi", vector_json(st.pi)}, {"report", to_json(st.report)}};
  const PushforwardOptions push = push_options(options);
  int verdict = kVerdictPass;
  try {
    std::vector<std::pair<Density, Density>> pairs;
    const auto vs = vertices(lambda);
    for (std::size_t s = 1; s < vs.size() && s < 4; ++s) pairs.emplace_back(vs[0], vs[s]);
    if (pairs.empty()) pairs.emplace_back(vs[0], vs[0]);
    const auto weak = weak_contraction_report(model, pairs, options.nmax, push, 1e-3);
    out.report["weak_contraction"] = to_json(weak);
    Json rows = Json::array();
    for (std::size_t k = 0; k < weak.series.size(); ++k)
      for (const auto& r : weak.series[k].rows)
        rows.push_back({{"pair", k}, {"n", r.n}, {"distance", r.distance}, {"floor", r.floor},
                        {"atoms_x", r.atoms_x}, {"atoms_y", r.atoms_y}});
    out.tables["weak_contraction"] = std::move(rows);
    if (!weak.passed) verdict = worse(verdict, kVerdictViolated);

    std::vector<Density> starts = vs;
    starts.push_back(st.pi);
    const auto bary = barycenter_identity_check(model, starts, std::min<std::size_t>(options.nmax, 6), push);
    out.report["barycenter_identity"] = to_json(bary);
    if (!bary.passed) verdict = worse(verdict, kVerdictViolated);

    std::vector<LipschitzFunction> functions;
    for (std::size_t s = 0; s < model.num_states() && s < 4; ++s) functions.push_back(coordinate_function(s, lambda));
    functions.push_back(max_coordinate_function(lambda));
    const auto grid = simplex_grid(lambda, 0.0, 200, options.seed);
    const auto osc = osc_decay_report(model, functions, options.nmax, grid, push);
    out.report["osc_decay"] = to_json(osc);
    Json osc_rows = Json::array();
    for (std::size_t f = 0; f < osc.series.size(); ++f) {
      for (const auto& r : osc.series[f].rows)
        osc_rows.push_back({{"function", osc.series[f].function}, {"n", r.n}, {"max", r.max}, {"min", r.min},
                            {"osc", r.osc}});
      // Linear functions attain their extremes at vertices, so the grid sees
      // the true oscillation and monotonicity is exact.
      if (f + 1 < osc.series.size() && !osc.series[f].monotone) verdict = worse(verdict, kVerdictViolated);
    }
    out.tables["osc"] = std::move(osc_rows);

    Json lip = Json::array();
    const auto lip_grid = simplex_grid(lambda, model.num_states() == 2 ? 0.01 : 0.1, 40, options.seed);
    for (const auto& u : {subset_function({0}, lambda), distance_function(st.pi, lambda),
                          max_coordinate_function(lambda)}) {
      const auto probe = lipschitz_probe(model, u, std::min<std::size_t>(options.nmax, 4), lip_grid, push);
      if (!probe.passed) verdict = worse(verdict, kVerdictViolated);
      lip.push_back(to_json(probe));
    }
    out.report["lipschitz"] = std::move(lip);

    Json p_section = Json::object();
    if (const auto cert = resolve_P(model, st.pi, options, p_section)) {
      const Density x0 = perron_density(model, cert->f0);
      out.report["tightness"] = to_json(tightness_probe(model, x0, 0.1, starts, options.nmax, push));
    } else {
      out.report["tightness"] = nullptr;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BudgetExceeded) throw;
    out.report["budget_error"] = e.what();
    verdict = worse(verdict, kVerdictInconclusive);
  }
  out.verdict = verdict;
  out.report["verdict"] = verdict;
  return out;
}

CommandResult run_couple(const HmmModel& model, const CommandOptions& options) {
  CommandResult out;
  const auto st = stationary(model);
  CoupledChainOptions copt;
  copt.budget = options.budget;
  int verdict = kVerdictPass;
  try {
    const auto e = condition_E_estimate(model, st.pi, options.rho, options.nmax, copt);
    out.report["condition_E"] = to_json(e);
    Json rows = Json::array();
    for (const auto& r : e.rows) rows.push_back({{"fixture", r.fixture}, {"N", r.n}, {"alpha", r.alpha}, {"atoms", r.atoms}});
    out.tables["condition_E"] = std::move(rows);

    Json p_section = Json::object();
    const auto cert = resolve_P(model, st.pi, options, p_section);
    out.report["condition_P"] = std::move(p_section);
    if (cert) {
      E1VerifyOptions vopt;
      vopt.seed = options.seed;
      const auto e1 = e1_constants(model, st.pi, *cert, options.rho, vopt);
      out.report["condition_E1"] = to_json(e1, model);
      const auto ineq = coupling_inequality_check(model, st.pi, e1.certificate, copt);
      out.report["coupling_inequality"] = to_json(ineq);
      if (!ineq.holds) verdict = worse(verdict, kVerdictViolated);
      // Only asserted where the sampled E1 verification found no counterexample.
      if (e1.verification.passed() && ineq.achieved_alpha < e1.certificate.alpha() - 1e-9)
        verdict = worse(verdict, kVerdictViolated);
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BudgetExceeded) throw;
    out.report["budget_error"] = e.what();
    verdict = worse(verdict, kVerdictInconclusive);
  }
  out.verdict = verdict;
  out.report["verdict"] = verdict;
  return out;
}

CommandResult run_simulate(const HmmModel& model, const CommandOptions& options) {
  CommandResult out;
  const auto st = stationary(model);
  const auto path = simulate(model, st.pi, options.steps, options.seed);
  std::vector<std::size_t> obs;
  for (const auto& step : path.steps) obs.push_back(step.obs);
  const auto traj = run_filter(model, st.pi, obs);

  Json rows = Json::array();
  Vector freq = Vector::Zero(static_cast<Eigen::Index>(model.num_states()));
  for (std::size_t n = 0; n <= path.steps.size(); ++n) {
    const std::size_t state = n == 0 ? path.initial_state : path.steps[n - 1].state;
    if (n > 0) freq(static_cast<Eigen::Index>(state)) += 1.0;
    Json row{{"n", n}, {"state", model.states().ids()[state]},
             {"obs", n == 0 ? Json("") : Json(model.obs().ids()[path.steps[n - 1].obs])}};
    for (std::size_t s = 0; s < model.num_states(); ++s)
      row["z_" + model.states().ids()[s]] = traj.states[n](static_cast<Eigen::Index>(s));
    rows.push_back(std::move(row));
  }
  if (!path.steps.empty()) freq /= static_cast<double>(path.steps.size());
  out.tables["trajectory"] = std::move(rows);
  Json zero = Json::array();
  for (std::size_t k : traj.zero_likelihood_steps) zero.push_back(k);
  out.report = {{"steps", options.steps},
                {"seed", options.seed},
                {"pi", vector_json(st.pi)},
                {"state_frequency", vector_json(freq)},
                {"pi_mass", vector_json(st.pi.cwiseProduct(model.lambda()))},
                {"zero_likelihood_steps", std::move(zero)},
                {"verdict", kVerdictPass}};
  return out;
}

CommandResult run_transport(const PointMassMeasure& mu, const PointMassMeasure& nu, const Vector& lambda) {
  CommandResult out;
  const auto kr = kantorovich(mu, nu, lambda);
  out.report["kantorovich"] = to_json(kr);
  const double lb = barycenter_lower_bound(mu, nu, lambda);
  out.report["barycenter_lower_bound"] = lb;
  const auto nearest = nearest_barycenter_distance(mu, barycenter(nu), lambda);
  out.report["nearest_barycenter"] = to_json(nearest);
  bool ok = kr.certificate.ok() && kr.distance >= lb - 1e-12 &&
            std::abs(nearest.achieved - nearest.lower_bound) <= 1e-9;
  Json plan = Json::array();
  for (const auto& e : kr.plan.entries) plan.push_back({{"i", e.i}, {"j", e.j}, {"mass", e.mass}, {"cost", e.cost}});
  out.tables["plan"] = std::move(plan);
  out.verdict = ok ? kVerdictPass : kVerdictViolated;
  out.report["verdict"] = out.verdict;
  return out;
}

}  // namespace hmmerg
