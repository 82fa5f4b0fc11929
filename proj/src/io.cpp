#include "hmmerg/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace hmmerg {

namespace {

[[noreturn]] void parse_fail(const std::string& what) { fail(ErrorCode::ParseError, what); }

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) parse_fail(std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const Json& j, const std::string& what) {
  if (!j.is_number()) parse_fail(what + " is not a number");
  return j.get<double>();
}

Matrix matrix_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) parse_fail(std::string(what) + " must be a 2-d array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = j.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      parse_fail(std::string(what) + " has ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = number(row.at(static_cast<std::size_t>(c)), std::string(what) + " entry");
  }
  return m;
}

std::vector<std::string> ids_from_json(const Json& j, std::size_t n, const char* what) {
  std::vector<std::string> ids;
  if (j.is_null()) {
    for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i + 1));
    return ids;
  }
  if (!j.is_array() || j.size() != n) parse_fail(std::string(what) + " ids do not match the weights");
  for (const auto& e : j) ids.push_back(e.is_string() ? e.get<std::string>() : e.dump());
  return ids;
}

// Space from {"ids", <weights_key>} or a bare cell count.
std::optional<CellSpace> space_from_json(const Json& j, const char* key, const char* weights_key) {
  if (!j.contains(key)) return std::nullopt;
  const Json& s = j.at(key);
  if (s.is_number_integer()) return CellSpace::counting(s.get<std::size_t>());
  if (!s.is_object()) parse_fail(std::string("'") + key + "' must be an object or a count");
  if (s.contains(weights_key)) {
    Vector w = vector_from_json(s.at(weights_key), weights_key);
    auto ids = ids_from_json(s.contains("ids") ? s.at("ids") : Json(), static_cast<std::size_t>(w.size()), key);
    return CellSpace(std::move(ids), std::move(w));
  }
  if (!s.contains("ids")) parse_fail(std::string("'") + key + "' needs ids or weights");
  const std::size_t n = s.at("ids").size();
  return CellSpace(ids_from_json(s.at("ids"), n, key), Vector::Ones(static_cast<Eigen::Index>(n)));
}

std::size_t state_index(const Json& e, const CellSpace& space) {
  if (e.is_string()) {
    if (auto k = space.index_of(e.get<std::string>())) return *k;
    parse_fail("unknown cell id '" + e.get<std::string>() + "'");
  }
  if (e.is_number_integer()) {
    const auto k = e.get<long long>();
    if (k < 1 || static_cast<std::size_t>(k) > space.size()) parse_fail("cell index out of range");
    return static_cast<std::size_t>(k - 1);
  }
  parse_fail("cell reference must be an id or a 1-based index");
}

Json maybe(const std::optional<double>& v) { return v ? Json(*v) : Json(); }
Json maybe(const std::optional<std::size_t>& v) { return v ? Json(*v) : Json(); }

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorCode::IoError, "write to '" + path + "' failed");
}

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

Vector vector_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.empty()) parse_fail(std::string(what) + " must be a nonempty array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = number(j[k], what);
  return v;
}

Json subset_json(const Subset& s, const CellSpace& space) {
  Json out = Json::array();
  for (std::size_t k : s) out.push_back(space.ids().at(k));
  return out;
}

Subset subset_from_json(const Json& j, const CellSpace& space) {
  if (!j.is_array()) parse_fail("subset must be an array");
  Subset out;
  for (const auto& e : j) out.push_back(state_index(e, space));
  return out;
}

HmmModel model_from_json(const Json& j) {
  if (!j.is_object()) parse_fail("model must be a JSON object");
  auto states = space_from_json(j, "states", "lambda");
  auto obs = space_from_json(j, "obs", "tau");
  ModelSpec spec;

  if (j.contains("m")) {
    const Json& m = j.at("m");
    if (!m.is_array() || m.empty() || !m[0].is_array() || m[0].empty() || !m[0][0].is_array())
      parse_fail("'m' must be a 3-d array indexed [s][t][a]");
    const std::size_t ns = m.size();
    const std::size_t na = m[0][0].size();
    if (!states) states = CellSpace::counting(ns);
    if (!obs) obs = CellSpace::counting(na);
    if (states->size() != ns || obs->size() != na) parse_fail("'m' does not match the declared spaces");
    spec.m.assign(na, Matrix::Zero(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(ns)));
    for (std::size_t s = 0; s < ns; ++s) {
      if (!m[s].is_array() || m[s].size() != ns) parse_fail("'m' has ragged rows");
      for (std::size_t t = 0; t < ns; ++t) {
        if (!m[s][t].is_array() || m[s][t].size() != na) parse_fail("'m' has ragged observation entries");
        for (std::size_t a = 0; a < na; ++a)
          spec.m[a](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = number(m[s][t][a], "m entry");
      }
    }
  } else if (j.contains("p")) {
    const Matrix p = matrix_from_json(j.at("p"), "p");
    if (p.rows() != p.cols()) parse_fail("'p' must be square");
    if (!states) states = CellSpace::counting(static_cast<std::size_t>(p.rows()));
    if (static_cast<Eigen::Index>(states->size()) != p.rows()) parse_fail("'p' does not match the state space");
    if (j.contains("q")) {
      const Matrix q = matrix_from_json(j.at("q"), "q");
      if (q.rows() != p.rows()) parse_fail("'q' must have one row per state");
      if (!obs) obs = CellSpace::counting(static_cast<std::size_t>(q.cols()));
      if (static_cast<Eigen::Index>(obs->size()) != q.cols()) parse_fail("'q' does not match the observations");
      if ((q.array() < 0.0).any()) fail(ErrorCode::NegativeDensity, "q has a negative entry");
      const Vector row = q * obs->weights();
      for (Eigen::Index t = 0; t < row.size(); ++t)
        if (std::abs(row(t) - 1.0) > kStochasticTolerance)
          fail(ErrorCode::NonStochasticEmission, "sum_a q(t,a) tau(a) = " + std::to_string(row(t)) + " at '" +
                                                     states->ids()[static_cast<std::size_t>(t)] + "'");
      for (Eigen::Index a = 0; a < q.cols(); ++a) spec.m.push_back(p * q.col(a).asDiagonal());
    } else if (j.contains("partition")) {
      const Json& cells = j.at("partition");
      if (!cells.is_array() || cells.empty()) parse_fail("'partition' must be a nonempty array");
      if (!obs) obs = CellSpace::counting(cells.size());
      if (obs->size() != cells.size()) parse_fail("'partition' does not match the observations");
      std::vector<int> owner(states->size(), -1);
      for (std::size_t a = 0; a < cells.size(); ++a) {
        const Subset cell = subset_from_json(cells[a], *states);
        if (cell.empty()) fail(ErrorCode::BadPartition, "cell " + std::to_string(a + 1) + " is empty");
        Matrix m = Matrix::Zero(p.rows(), p.cols());
        for (std::size_t t : cell) {
          if (owner[t] >= 0) fail(ErrorCode::BadPartition, "state '" + states->ids()[t] + "' lies in two cells");
          owner[t] = static_cast<int>(a);
          m.col(static_cast<Eigen::Index>(t)) = p.col(static_cast<Eigen::Index>(t));
        }
        spec.m.push_back(std::move(m));
      }
      for (std::size_t t = 0; t < owner.size(); ++t)
        if (owner[t] < 0) fail(ErrorCode::BadPartition, "state '" + states->ids()[t] + "' is not covered");
      if (!(obs->weights().array() == 1.0).all())
        parse_fail("partition models use counting observation weights");
    } else {
      parse_fail("'p' needs either 'q' or 'partition'");
    }
  } else {
    parse_fail("model needs 'm' or 'p'");
  }
  spec.states = std::move(*states);
  spec.obs = std::move(*obs);
  return build_model(spec);
}

Json model_to_json(const HmmModel& model) {
  Json m = Json::array();
  for (std::size_t s = 0; s < model.num_states(); ++s) {
    Json row = Json::array();
    for (std::size_t t = 0; t < model.num_states(); ++t) {
      Json cell = Json::array();
      for (std::size_t a = 0; a < model.num_obs(); ++a) cell.push_back(model.density(s, t, a));
      row.push_back(std::move(cell));
    }
    m.push_back(std::move(row));
  }
  return {{"states", {{"ids", model.states().ids()}, {"lambda", vector_json(model.lambda())}}},
          {"obs", {{"ids", model.obs().ids()}, {"tau", vector_json(model.tau())}}},
          {"m", std::move(m)}};
}

HmmModel load_model(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    parse_fail("'" + path + "': " + e.what());
  }
  return model_from_json(j);
}

PointMassMeasure measure_from_json(const Json& j, const Vector* lambda, Vector* lambda_out) {
  Vector lam;
  if (j.is_object() && j.contains("lambda")) {
    lam = vector_from_json(j.at("lambda"), "lambda");
    if (lambda && (lambda->size() != lam.size() || (*lambda - lam).cwiseAbs().maxCoeff() > 1e-12))
      fail(ErrorCode::SpaceMismatch, "measure lambda differs from the model");
  } else if (lambda) {
    lam = *lambda;
  } else {
    parse_fail("measure needs 'lambda' when no model is given");
  }
  const Json& atoms = require(j, "atoms");
  if (!atoms.is_array() || atoms.empty()) parse_fail("'atoms' must be a nonempty array");
  PointMassMeasure mu;
  for (const auto& atom : atoms) {
    const double w = number(require(atom, "weight"), "weight");
    if (!(w >= 0.0)) fail(ErrorCode::InvalidArgument, "negative atom weight");
    Density x = vector_from_json(require(atom, "point"), "point");
    if (x.size() != lam.size()) fail(ErrorCode::SpaceMismatch, "atom point has the wrong dimension");
    if ((x.array() < 0.0).any()) fail(ErrorCode::NegativeDensity, "atom point has a negative entry");
    if (std::abs(total_mass(x, lam) - 1.0) > 1e-9) fail(ErrorCode::InvalidArgument, "atom point is not in K");
    mu.add(std::move(x), w);
  }
  if (lambda_out) *lambda_out = lam;
  return mu;
}

Json measure_to_json(const PointMassMeasure& mu) {
  Json atoms = Json::array();
  for (std::size_t k = 0; k < mu.size(); ++k)
    atoms.push_back({{"weight", mu.weights[k]}, {"point", vector_json(mu.points[k])}});
  return {{"atoms", std::move(atoms)}};
}

Json to_json(const RateFit& f) { return {{"rate", maybe(f.rate)}, {"log_residual", f.residual}}; }

Json to_json(const ErgodicityReport& r) {
  Json sup = Json::array();
  for (double v : r.sup_tv) sup.push_back(v);
  return {{"sup_tv", std::move(sup)},
          {"stationarity_residual", r.stationarity_residual},
          {"pi_converged", r.pi_converged},
          {"power_iterations", r.power_iterations},
          {"ergodic", r.ergodic},
          {"mixing_n", maybe(r.mixing_n)},
          {"periodic_suspected", r.periodic_suspected},
          {"verdict", r.verdict}};
}

Json to_json(const ConditionAResult& r, const CellSpace& obs) {
  Json out{{"products_examined", r.products_examined}, {"inconclusive", r.inconclusive}};
  out["witness"] = r.witness ? subset_json(*r.witness, obs) : Json();
  return out;
}

Json to_json(const KrReport& r, const CellSpace& obs) {
  Json ratios = Json::array();
  for (double v : r.ratios) ratios.push_back(v);
  return {{"sequence", subset_json(r.sequence, obs)},
          {"ratios", std::move(ratios)},
          {"fitted_rate", maybe(r.fitted_rate)},
          {"rank_one_approach", r.rank_one_approach},
          {"verdict", r.verdict}};
}

Json to_json(const PCertificate& c, const HmmModel& model) {
  Json f1 = Json::object();
  for (const auto& [a, set] : c.f1) f1[model.obs().ids()[a]] = subset_json(set, model.states());
  return {{"F0", subset_json(c.f0, model.states())},
          {"B0", subset_json(c.b0, model.obs())},
          {"d0", c.d0},
          {"D0", c.big_d0},
          {"beta0", c.beta0},
          {"F1", std::move(f1)}};
}

Json to_json(const PViolation& v, const HmmModel& model) {
  Json out{{"clause", v.clause}, {"detail", v.detail}};
  out["obs"] = v.obs ? Json(model.obs().ids()[*v.obs]) : Json();
  out["row"] = v.row ? Json(model.states().ids()[*v.row]) : Json();
  out["col"] = v.col ? Json(model.states().ids()[*v.col]) : Json();
  return out;
}

Json to_json(const E1Result& r, const HmmModel& model) {
  const auto& c = r.certificate;
  const auto& v = r.verification;
  return {{"rho", c.rho},
          {"N", c.n},
          {"kappa", c.kappa},
          {"K0", {{"F0", subset_json(c.f0, model.states())}, {"threshold", c.k0_threshold}}},
          {"xi", c.xi},
          {"beta", c.beta},
          {"eta", c.eta},
          {"alpha", c.alpha()},
          {"verification",
           {{"pairs", v.pairs},
            {"sequences", v.sequences},
            {"exhaustive_sequences", v.exhaustive_sequences},
            {"likelihood_counterexamples", v.likelihood_counterexamples},
            {"contraction_counterexamples", v.contraction_counterexamples},
            {"min_likelihood", v.min_likelihood},
            {"max_distance", v.max_distance},
            {"first_counterexample", v.first_counterexample},
            {"passed", v.passed()}}}};
}

Json to_json(const HopfCheck& h) {
  Json kappas = Json::array();
  for (double k : h.kappas) kappas.push_back(k);
  return {{"achieved", h.achieved}, {"bound", h.bound}, {"kappas", std::move(kappas)}, {"holds", h.holds}};
}

Json to_json(const EConditionReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"fixture", row.fixture}, {"N", row.n}, {"alpha", row.alpha}, {"atoms", row.atoms}});
  Json first = Json::array();
  for (const auto& [id, n] : r.first_positive) first.push_back({{"fixture", id}, {"N", maybe(n)}});
  return {{"rho", r.rho},
          {"N_max", r.n_max},
          {"rows", std::move(rows)},
          {"first_positive", std::move(first)},
          {"pruned_mass", 0.0},
          {"note", r.note}};
}

Json to_json(const KantorovichResult& r) {
  Json plan = Json::array();
  for (const auto& e : r.plan.entries) plan.push_back({{"i", e.i}, {"j", e.j}, {"mass", e.mass}, {"cost", e.cost}});
  const auto& c = r.certificate;
  return {{"distance", r.distance},
          {"method", r.method},
          {"plan", std::move(plan)},
          {"certificate",
           {{"marginal_residual", c.marginal_residual},
            {"slackness_residual", c.slackness_residual},
            {"dual_infeasibility", c.dual_infeasibility},
            {"duality_gap", c.duality_gap},
            {"ok", c.ok()}}}};
}

Json to_json(const NearestBarycenterResult& r) {
  return {{"achieved", r.achieved},
          {"lower_bound", r.lower_bound},
          {"match_cost", r.match_cost},
          {"psi", measure_to_json(r.psi)}};
}

Json to_json(const WeakContractionReport& r) {
  Json series = Json::array();
  for (const auto& s : r.series) {
    Json rows = Json::array();
    for (const auto& row : s.rows)
      rows.push_back({{"n", row.n},
                      {"distance", row.distance},
                      {"floor", row.floor},
                      {"atoms_x", row.atoms_x},
                      {"atoms_y", row.atoms_y},
                      {"pruned_x", row.pruned_x},
                      {"pruned_y", row.pruned_y},
                      {"method", row.method}});
    series.push_back({{"x", vector_json(s.x)},
                      {"y", vector_json(s.y)},
                      {"rows", std::move(rows)},
                      {"fit_last_half", to_json(s.fit)},
                      {"floor_respected", s.floor_respected},
                      {"first_below", maybe(s.first_below)}});
  }
  return {{"series", std::move(series)},
          {"n_max", r.n_max},
          {"threshold", r.threshold},
          {"prune_eps", r.prune_eps},
          {"merge_tol", r.merge_tol},
          {"passed", r.passed}};
}

Json to_json(const OscDecayReport& r) {
  Json series = Json::array();
  for (const auto& s : r.series) {
    Json rows = Json::array();
    for (const auto& row : s.rows) rows.push_back({{"n", row.n}, {"max", row.max}, {"min", row.min}, {"osc", row.osc}});
    series.push_back({{"function", s.function},
                      {"rows", std::move(rows)},
                      {"monotone", s.monotone},
                      {"fit_last_half", to_json(s.fit)},
                      {"decays", s.decays},
                      {"plateau", s.plateau}});
  }
  return {{"series", std::move(series)},
          {"grid_points", r.grid_points},
          {"prune_eps", r.prune_eps},
          {"merge_tol", r.merge_tol}};
}

Json to_json(const BarycenterIdentityReport& r) {
  return {{"max_residual", r.max_residual},
          {"worst_start", r.worst_start},
          {"worst_n", r.worst_n},
          {"tolerance", 1e-10},
          {"passed", r.passed}};
}

Json to_json(const TightnessReport& r) {
  Json series = Json::array();
  for (const auto& s : r.series) {
    Json mass = Json::array();
    for (double m : s.mass) mass.push_back(m);
    series.push_back({{"start", vector_json(s.start)}, {"mass", std::move(mass)}, {"liminf", s.liminf}});
  }
  return {{"x0", vector_json(r.x0)},
          {"epsilon", r.epsilon},
          {"series", std::move(series)},
          {"liminf", r.liminf},
          {"pruned_mass", r.pruned_mass}};
}

Json to_json(const LipschitzProbeReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json o{{"n", row.n}, {"max_ratio", row.max_ratio}, {"within_three_gamma", row.within_three_gamma}};
    o["within_one_step_bound"] = row.within_one_step_bound ? Json(*row.within_one_step_bound) : Json();
    rows.push_back(std::move(o));
  }
  return {{"function", r.function},
          {"gamma", r.gamma},
          {"sup_norm", r.sup_norm},
          {"pairs", r.pairs},
          {"rows", std::move(rows)},
          {"passed", r.passed}};
}

Json to_json(const CouplingInequalityCheck& c) {
  return {{"N", c.n},
          {"distance", c.distance},
          {"alpha", c.alpha},
          {"achieved_alpha", c.achieved_alpha},
          {"bound", c.bound},
          {"holds", c.holds}};
}

std::string to_csv(const Json& rows) {
  if (!rows.is_array() || rows.empty()) return "";
  std::ostringstream os;
  os.precision(17);
  std::vector<std::string> cols;
  for (const auto& [key, value] : rows.front().items()) cols.push_back(key);
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) os << ',';
      if (!row.contains(cols[c])) continue;
      const Json& v = row.at(cols[c]);
      if (v.is_string()) {
        std::string s = v.get<std::string>();
        if (s.find_first_of(",\"\n") != std::string::npos) {
          std::string q = "\"";
          for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
          os << q << '"';
        } else {
          os << s;
        }
      } else if (v.is_number_float()) {
        os << v.get<double>();
      } else if (v.is_structured()) {
        std::string q = "\"";
        for (char ch : v.dump()) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        os << q << '"';
      } else if (!v.is_null()) {
        os << v.dump();
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace hmmerg
