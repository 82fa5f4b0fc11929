// hmmerg: batch analysis of hidden Markov filters.
//
// Exit codes: 0 all assertions passed, 1 usage or input error,
// 2 an assertion was violated, 3 inconclusive or budget exhausted.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hmmerg/hmmerg.h"

namespace {

using nlohmann::json;

struct Flags {
  std::string model;
  double rho = 0.1;
  std::size_t nmax = 8;
  std::uint64_t seed = 1;
  std::size_t budget = 10'000'000;
  std::size_t steps = 100;
  std::string out;
  std::string f0;
  std::string b0;
  std::string mu;
  std::string nu;
};

int input_error(const char* stage) {
  std::fprintf(stderr, "hmmerg: %s: %s\n", stage, hmmerg_last_error());
  return 1;
}

std::string csv(const json& rows) {
  if (!rows.is_array() || rows.empty()) return "";
  std::string text;
  std::vector<std::string> cols;
  for (const auto& [key, value] : rows.front().items()) cols.push_back(key);
  for (std::size_t c = 0; c < cols.size(); ++c) text += (c ? "," : "") + cols[c];
  text += '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) text += ',';
      const json& v = row.contains(cols[c]) ? row.at(cols[c]) : json();
      if (v.is_null()) continue;
      std::string cell = v.is_string() ? v.get<std::string>() : v.dump();
      if (cell.find_first_of(",\"\n") != std::string::npos) {
        std::string quoted = "\"";
        for (char ch : cell) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        cell = quoted + '"';
      }
      text += cell;
    }
    text += '\n';
  }
  return text;
}

bool write(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) {
    std::fprintf(stderr, "hmmerg: cannot write %s\n", path.string().c_str());
    return false;
  }
  return true;
}

// Prints a summary line and writes <name>.json plus one CSV per table.
int emit(const std::string& name, char* text, int verdict, const Flags& flags) {
  const json doc = json::parse(text);
  hmmerg_string_free(text);
  if (flags.out.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    const std::filesystem::path dir(flags.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
      std::fprintf(stderr, "hmmerg: cannot create %s\n", flags.out.c_str());
      return 1;
    }
    if (!write(dir / (name + ".json"), doc["report"].dump(2) + "\n")) return 1;
    for (const auto& [table, rows] : doc["tables"].items())
      if (!write(dir / (table + ".csv"), csv(rows))) return 1;
  }
  const char* word = verdict == HMMERG_PASS ? "pass" : verdict == HMMERG_VIOLATED ? "violated" : "inconclusive";
  std::fprintf(stderr, "%s: %s\n", name.c_str(), word);
  return verdict;
}

int run_model_command(const std::string& name, const Flags& flags,
                      int (*fn)(const hmmerg_model*, const hmmerg_options*, char**, int*)) {
  hmmerg_model* model = nullptr;
  if (hmmerg_model_load(flags.model.c_str(), &model) != HMMERG_OK) return input_error("model");
  hmmerg_options options;
  hmmerg_options_default(&options);
  options.rho = flags.rho;
  options.nmax = flags.nmax;
  options.seed = flags.seed;
  options.budget = flags.budget;
  options.steps = flags.steps;
  options.f0_json = flags.f0.empty() ? nullptr : flags.f0.c_str();
  options.b0_json = flags.b0.empty() ? nullptr : flags.b0.c_str();
  char* text = nullptr;
  int verdict = 0;
  const int status = fn(model, &options, &text, &verdict);
  hmmerg_model_free(model);
  if (status != HMMERG_OK) return input_error(name.c_str());
  return emit(name, text, verdict, flags);
}

int run_transport(const Flags& flags) {
  hmmerg_model* model = nullptr;
  if (!flags.model.empty() && hmmerg_model_load(flags.model.c_str(), &model) != HMMERG_OK)
    return input_error("model");
  hmmerg_measure* mu = nullptr;
  hmmerg_measure* nu = nullptr;
  int rc = 0;
  if (hmmerg_measure_load(flags.mu.c_str(), model, &mu) != HMMERG_OK) {
    rc = input_error("mu");
  } else if (hmmerg_measure_load(flags.nu.c_str(), model, &nu) != HMMERG_OK) {
    rc = input_error("nu");
  } else {
    char* text = nullptr;
    int verdict = 0;
    if (hmmerg_transport(mu, nu, &text, &verdict) != HMMERG_OK)
      rc = input_error("transport");
    else
      rc = emit("transport", text, verdict, flags);
  }
  hmmerg_measure_free(mu);
  hmmerg_measure_free(nu);
  hmmerg_model_free(model);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Filter ergodicity checks for hidden Markov models with densities"};
  app.require_subcommand(1);
  Flags flags;

  auto common = [&](CLI::App* cmd, bool model_required) {
    auto* opt = cmd->add_option("--model", flags.model, "model JSON file");
    if (model_required) opt->required()->check(CLI::ExistingFile);
    cmd->add_option("--rho", flags.rho, "closeness level in (0, 2]")->check(CLI::Range(1e-12, 2.0));
    cmd->add_option("--nmax", flags.nmax, "horizon");
    cmd->add_option("--seed", flags.seed, "random seed");
    cmd->add_option("--budget", flags.budget, "enumeration budget (expansions)");
    cmd->add_option("--out", flags.out, "output directory (default: JSON to stdout)");
  };

  auto* check = app.add_subcommand("check", "conditions A, KR, P and E1");
  common(check, true);
  check->add_option("--f0", flags.f0, "Condition P state set as a JSON array of ids");
  check->add_option("--b0", flags.b0, "Condition P observation set as a JSON array of ids");
  auto* contract = app.add_subcommand("contract", "Hopf contraction certificates");
  common(contract, true);
  auto* ergodics = app.add_subcommand("ergodics", "stationary law, weak contraction and oscillation decay");
  common(ergodics, true);
  ergodics->add_option("--f0", flags.f0, "state set for the tightness probe");
  ergodics->add_option("--b0", flags.b0, "observation set for the tightness probe");
  auto* transport = app.add_subcommand("transport", "Kantorovich distance and barycenter matching");
  common(transport, false);
  transport->add_option("--mu", flags.mu, "first measure JSON file")->required()->check(CLI::ExistingFile);
  transport->add_option("--nu", flags.nu, "second measure JSON file")->required()->check(CLI::ExistingFile);
  auto* simulate = app.add_subcommand("simulate", "sample a path and run the filter along it");
  common(simulate, true);
  simulate->add_option("--steps", flags.steps, "path length");
  auto* couple = app.add_subcommand("couple", "Condition E evidence from the coupled filter");
  common(couple, true);
  couple->add_option("--f0", flags.f0, "Condition P state set");
  couple->add_option("--b0", flags.b0, "Condition P observation set");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (check->parsed()) return run_model_command("check", flags, hmmerg_check);
  if (contract->parsed()) return run_model_command("contract", flags, hmmerg_contract);
  if (ergodics->parsed()) return run_model_command("ergodics", flags, hmmerg_ergodics);
  if (simulate->parsed()) return run_model_command("simulate", flags, hmmerg_simulate);
  if (couple->parsed()) return run_model_command("couple", flags, hmmerg_couple);
  if (transport->parsed()) return run_transport(flags);
  return 1;
}
