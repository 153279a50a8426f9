#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rbdsdep/drivers.hpp"
#include "rbdsdep/envelope.hpp"
#include "rbdsdep/lsmc.hpp"
#include "rbdsdep/problem.hpp"
#include "rbdsdep/tree.hpp"

namespace rbdsdep {

enum class Pipeline { solve, inf_sequence, bracketing, sup_sequence, compare, ito_check };
const char* to_string(Pipeline pipeline);

enum class SolverKind { tree, lsmc };

/// Components of the Ito check pipeline, as expression text.
struct ItoSettings {
  std::string initial = "0";
  std::string drift = "0";
  std::string backward = "0";
  std::vector<std::string> forward;  // d entries, default "0"
  std::string reflection = "0";
  std::vector<std::string> jump;     // m entries, default "0"
  std::optional<double> expected_second_moment;
};

/// A fully validated experiment. Built by `load_config` / `parse_config`.
struct ExperimentConfig {
  Problem problem;
  std::optional<Problem> second;  // compare pipeline

  std::size_t paths = 1000;
  std::uint64_t seed = 1;
  DriverMode mode = DriverMode::gaussian;
  bool exhaustive = false;

  SolverKind solver = SolverKind::tree;
  SchemeParams scheme;
  TreeLimits limits;
  EnvelopeParams envelope;
  std::vector<double> indices;
  std::size_t iterations = 5;

  Pipeline pipeline = Pipeline::solve;
  ItoSettings ito;
  std::filesystem::path output_directory = "out";

  std::string canonical;  // sorted "section.key=value" lines
  std::string hash;       // FNV-1a 64 of `canonical`
  std::vector<std::string> warnings;
};

/// Parses the key-value grammar (see `config_grammar`). Every error names the offending key
/// (or line) and the violated constraint.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string_view config_grammar();

struct RunResult {
  int exit_code = 0;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> messages;  // validator outcomes, one line each
};

/// Runs the configured pipeline, writing CSV / JSON reports and a manifest atomically into
/// `output_directory`. exit_code is 0 iff every validator of the pipeline passed.
RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& output_directory);

}  // namespace rbdsdep
