#pragma once

// Batch analyses behind the CLI subcommands. Each returns a JSON report, CSV
// tables as arrays of flat rows, and a verdict.

#include <cstdint>
#include <optional>

#include "hmmerg/io.hpp"

namespace hmmerg {

enum Verdict : int { kVerdictPass = 0, kVerdictViolated = 2, kVerdictInconclusive = 3 };

struct CommandOptions {
  double rho = 0.1;
  std::size_t nmax = 8;
  std::uint64_t seed = 1;
  std::size_t budget = 10'000'000;
  std::optional<Subset> f0;  // Condition P candidate; searched when absent
  std::optional<Subset> b0;
  std::size_t steps = 100;   // simulate
};

struct CommandResult {
  Json report;
  Json tables = Json::object();  // name -> array of rows
  int verdict = kVerdictPass;
};

// Condition P candidates: B0 = {a} with F0 the column support of M_a, and
// B0 = A with F0 = S. The valid one with the smallest D0/d0 wins.
std::optional<PCertificate> search_condition_P(const HmmModel& model, const Density& pi,
                                               std::vector<PViolation>* rejected = nullptr);

CommandResult run_check(const HmmModel& model, const CommandOptions& options);
CommandResult run_contract(const HmmModel& model, const CommandOptions& options);
CommandResult run_ergodics(const HmmModel& model, const CommandOptions& options);
CommandResult run_couple(const HmmModel& model, const CommandOptions& options);
CommandResult run_simulate(const HmmModel& model, const CommandOptions& options);
CommandResult run_transport(const PointMassMeasure& mu, const PointMassMeasure& nu, const Vector& lambda);

}  // namespace hmmerg
