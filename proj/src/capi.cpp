#include "hmmerg/hmmerg.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "hmmerg/commands.hpp"

struct hmmerg_model {
  hmmerg::HmmModel model;
};

struct hmmerg_measure {
  hmmerg::PointMassMeasure measure;
  hmmerg::Vector lambda;
};

namespace {

thread_local std::string last_error;

int record(int status, const char* what) {
  last_error = what;
  return status;
}

// Runs body, translating exceptions into status codes.
template <class F>
int guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return HMMERG_OK;
  } catch (const hmmerg::Error& e) {
    return record(static_cast<int>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return record(HMMERG_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return record(HMMERG_E_INTERNAL, e.what());
  } catch (...) {
    return record(HMMERG_E_INTERNAL, "unknown error");
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void need(const void* p, const char* what) {
  if (!p) hmmerg::fail(hmmerg::ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

hmmerg::Density density_in(const hmmerg_model* model, const double* x, std::size_t len) {
  need(model, "model");
  need(x, "x");
  if (len != model->model.num_states())
    hmmerg::fail(hmmerg::ErrorCode::SpaceMismatch, "density length does not match the model");
  return Eigen::Map<const Eigen::VectorXd>(x, static_cast<Eigen::Index>(len));
}

hmmerg::CommandOptions convert(const hmmerg_model* model, const hmmerg_options* options) {
  hmmerg_options defaults;
  hmmerg_options_default(&defaults);
  const hmmerg_options& o = options ? *options : defaults;
  hmmerg::CommandOptions out;
  out.rho = o.rho;
  out.nmax = o.nmax;
  out.seed = o.seed;
  out.budget = o.budget;
  out.steps = o.steps;
  auto subset = [](const char* text, const hmmerg::CellSpace& space) -> std::optional<hmmerg::Subset> {
    if (!text) return std::nullopt;
    hmmerg::Json j;
    try {
      j = hmmerg::Json::parse(text);
    } catch (const hmmerg::Json::exception& e) {
      hmmerg::fail(hmmerg::ErrorCode::ParseError, e.what());
    }
    return hmmerg::subset_from_json(j, space);
  };
  out.f0 = subset(o.f0_json, model->model.states());
  out.b0 = subset(o.b0_json, model->model.obs());
  return out;
}

template <class Run>
int report(const hmmerg_model* model, const hmmerg_options* options, char** json_out, int* verdict, Run&& run) {
  return guarded([&] {
    need(model, "model");
    need(json_out, "json_out");
    const hmmerg::CommandResult r = run(model->model, convert(model, options));
    const hmmerg::Json j{{"report", r.report}, {"tables", r.tables}, {"verdict", r.verdict}};
    *json_out = duplicate(j.dump(2));
    if (verdict) *verdict = r.verdict;
  });
}

}  // namespace

extern "C" {

void hmmerg_options_default(hmmerg_options* options) {
  if (!options) return;
  const hmmerg::CommandOptions d;
  options->rho = d.rho;
  options->nmax = d.nmax;
  options->seed = d.seed;
  options->budget = d.budget;
  options->steps = d.steps;
  options->f0_json = nullptr;
  options->b0_json = nullptr;
}

const char* hmmerg_last_error(void) { return last_error.c_str(); }

const char* hmmerg_status_name(int status) {
  if (status == HMMERG_OK) return "Ok";
  if (status == HMMERG_E_INTERNAL) return "Internal";
  if (status < HMMERG_E_INVALID_ARGUMENT || status > HMMERG_E_IO) return "Unknown";
  return hmmerg::to_string(static_cast<hmmerg::ErrorCode>(status));
}

void hmmerg_string_free(char* s) { std::free(s); }

int hmmerg_model_load(const char* path, hmmerg_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new hmmerg_model{hmmerg::load_model(path)};
  });
}

int hmmerg_model_from_json(const char* json, hmmerg_model** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    hmmerg::Json j;
    try {
      j = hmmerg::Json::parse(json);
    } catch (const hmmerg::Json::exception& e) {
      hmmerg::fail(hmmerg::ErrorCode::ParseError, e.what());
    }
    *out = new hmmerg_model{hmmerg::model_from_json(j)};
  });
}

int hmmerg_model_to_json(const hmmerg_model* model, char** json_out) {
  return guarded([&] {
    need(model, "model");
    need(json_out, "json_out");
    *json_out = duplicate(hmmerg::model_to_json(model->model).dump());
  });
}

void hmmerg_model_free(hmmerg_model* model) { delete model; }

int hmmerg_model_num_states(const hmmerg_model* model, size_t* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = model->model.num_states();
  });
}

int hmmerg_model_num_obs(const hmmerg_model* model, size_t* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = model->model.num_obs();
  });
}

int hmmerg_stationary(const hmmerg_model* model, double* pi_out, size_t len) {
  return guarded([&] {
    need(model, "model");
    need(pi_out, "pi_out");
    if (len != model->model.num_states())
      hmmerg::fail(hmmerg::ErrorCode::SpaceMismatch, "output length does not match the model");
    const auto st = hmmerg::stationary(model->model);
    for (std::size_t s = 0; s < len; ++s) pi_out[s] = st.pi(static_cast<Eigen::Index>(s));
  });
}

int hmmerg_likelihood(const hmmerg_model* model, const double* x, size_t len, size_t obs, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = hmmerg::likelihood(model->model, density_in(model, x, len), obs);
  });
}

int hmmerg_update(const hmmerg_model* model, const double* x, size_t len, size_t obs, double* out) {
  return guarded([&] {
    need(out, "out");
    const hmmerg::Density y = hmmerg::update(model->model, density_in(model, x, len), obs);
    for (std::size_t s = 0; s < len; ++s) out[s] = y(static_cast<Eigen::Index>(s));
  });
}

int hmmerg_measure_from_json(const char* json, const hmmerg_model* model, hmmerg_measure** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    hmmerg::Json j;
    try {
      j = hmmerg::Json::parse(json);
    } catch (const hmmerg::Json::exception& e) {
      hmmerg::fail(hmmerg::ErrorCode::ParseError, e.what());
    }
    auto m = std::make_unique<hmmerg_measure>();
    m->measure = hmmerg::measure_from_json(j, model ? &model->model.lambda() : nullptr, &m->lambda);
    *out = m.release();
  });
}

int hmmerg_measure_load(const char* path, const hmmerg_model* model, hmmerg_measure** out) {
  return guarded([&] {
    need(path, "path");
    const std::string text = hmmerg::read_file(path);
    const int status = hmmerg_measure_from_json(text.c_str(), model, out);
    if (status != HMMERG_OK) throw hmmerg::Error(static_cast<hmmerg::ErrorCode>(status), last_error);
  });
}

void hmmerg_measure_free(hmmerg_measure* measure) { delete measure; }

int hmmerg_kantorovich(const hmmerg_measure* mu, const hmmerg_measure* nu, double* distance) {
  return guarded([&] {
    need(mu, "mu");
    need(nu, "nu");
    need(distance, "distance");
    if (mu->lambda.size() != nu->lambda.size() || mu->lambda != nu->lambda)
      hmmerg::fail(hmmerg::ErrorCode::SpaceMismatch, "measures live on different grids");
    *distance = hmmerg::kantorovich(mu->measure, nu->measure, mu->lambda).distance;
  });
}

int hmmerg_check(const hmmerg_model* model, const hmmerg_options* options, char** json_out, int* verdict) {
  return report(model, options, json_out, verdict, hmmerg::run_check);
}

int hmmerg_contract(const hmmerg_model* model, const hmmerg_options* options, char** json_out, int* verdict) {
  return report(model, options, json_out, verdict, hmmerg::run_contract);
}

int hmmerg_ergodics(const hmmerg_model* model, const hmmerg_options* options, char** json_out, int* verdict) {
  return report(model, options, json_out, verdict, hmmerg::run_ergodics);
}

int hmmerg_couple(const hmmerg_model* model, const hmmerg_options* options, char** json_out, int* verdict) {
  return report(model, options, json_out, verdict, hmmerg::run_couple);
}

int hmmerg_simulate(const hmmerg_model* model, const hmmerg_options* options, char** json_out, int* verdict) {
  return report(model, options, json_out, verdict, hmmerg::run_simulate);
}

int hmmerg_transport(const hmmerg_measure* mu, const hmmerg_measure* nu, char** json_out, int* verdict) {
  return guarded([&] {
    need(mu, "mu");
    need(nu, "nu");
    need(json_out, "json_out");
    if (mu->lambda.size() != nu->lambda.size() || mu->lambda != nu->lambda)
      hmmerg::fail(hmmerg::ErrorCode::SpaceMismatch, "measures live on different grids");
    const auto r = hmmerg::run_transport(mu->measure, nu->measure, mu->lambda);
    const hmmerg::Json j{{"report", r.report}, {"tables", r.tables}, {"verdict", r.verdict}};
    *json_out = duplicate(j.dump(2));
    if (verdict) *verdict = r.verdict;
  });
}

}  // extern "C"
