#include <CLI11.hpp>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "rbdsdep/error.hpp"
#include "rbdsdep/experiment.hpp"
#include "rbdsdep/expr.hpp"
#include "rbdsdep/parallel.hpp"

namespace {

// Exit codes: 0 success, 1 a validator failed, 2 invalid input, 3 numerical or runtime failure.
constexpr int kValidatorFailed = 1;
constexpr int kInvalidInput = 2;
constexpr int kRuntimeFailure = 3;

int run(const std::string& config_path, const std::string& out, std::size_t threads, bool verbose) {
  const rbdsdep::ExperimentConfig config = rbdsdep::load_config(config_path);
  rbdsdep::set_thread_count(threads);
  const std::filesystem::path directory = out.empty() ? config.output_directory : std::filesystem::path(out);
  if (verbose) {
    std::cerr << "config hash " << config.hash << ", pipeline " << rbdsdep::to_string(config.pipeline) << '\n';
  }
  const rbdsdep::RunResult result = rbdsdep::run_experiment(config, directory);
  for (const std::string& m : result.messages) std::cout << m << '\n';
  if (verbose) {
    for (const auto& f : result.files) std::cerr << "wrote " << f.string() << '\n';
  }
  return result.exit_code == 0 ? 0 : kValidatorFailed;
}

int validate(const std::string& config_path) {
  const rbdsdep::ExperimentConfig config = rbdsdep::load_config(config_path);
  for (const std::string& w : config.warnings) std::cout << "WARN " << w << '\n';
  std::cout << "ok " << config.hash << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reflected BSDEs with jumps: solvers, approximation sequences and validators"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::size_t threads = 1;
  bool verbose = false;
  CLI::App* run_cmd = app.add_subcommand("run", "Run the pipeline described by a config file");
  run_cmd->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out, "Output directory (overrides [output] directory)");
  run_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 1024));
  run_cmd->add_flag("--verbose,-v", verbose, "Log progress to stderr");

  std::string validate_path;
  CLI::App* validate_cmd = app.add_subcommand("validate-config", "Parse and check a config file without solving");
  validate_cmd->add_option("file", validate_path, "Config file")->required()->check(CLI::ExistingFile);

  CLI::App* grammar_cmd = app.add_subcommand("grammar", "Print the expression and config grammars");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInvalidInput;
  }

  try {
    if (*run_cmd) return run(config_path, out, threads, verbose);
    if (*validate_cmd) return validate(validate_path);
    if (*grammar_cmd) {
      std::cout << rbdsdep::expression_grammar() << '\n' << rbdsdep::config_grammar();
      return 0;
    }
  } catch (const rbdsdep::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const rbdsdep::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const rbdsdep::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return 0;
}
