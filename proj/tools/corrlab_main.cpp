// corrlab: one static binary, one subcommand per experiment action plus
// 'run' (action taken from the config file).  Every subcommand takes a
// config path; results and artifact paths go to stdout, errors to stderr
// with exit codes 2 (config), 3 (numeric), 4 (cap).

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "corrlab/cli.hpp"
#include "corrlab/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for holomorphic correspondences"};
  app.require_subcommand(1);

  static const struct {
    const char* name;
    const char* help;
  } kCommands[] = {
      {"run", "execute the action named inside the config"},
      {"degrees", "report topological and forward degrees"},
      {"preimage", "exact n-fold backward image of a point"},
      {"measure", "sampled balanced-measure estimate"},
      {"correlate", "correlation series I_n(phi, psi) with diagnostics"},
      {"birkhoff", "Birkhoff partial averages along backward trees"},
      {"mixing-report", "diagonal correlation reports for a function battery"},
      {"finite-check", "exact combinatorial-model verdicts"},
      {"render", "PGM density image of a point cloud"},
  };

  std::string config_path;
  for (const auto& cmd : kCommands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("config", config_path, "experiment config file")
        ->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    corrlab::ExperimentConfig cfg =
        corrlab::ExperimentConfig::from_file(config_path);
    if (sub == "run") {
      if (cfg.action.empty())
        throw corrlab::config_error(
            "config must set 'action' when invoked via 'run'");
    } else {
      if (!cfg.action.empty() && cfg.action != sub)
        throw corrlab::config_error("config names action '" + cfg.action +
                                    "' but the subcommand is '" + sub + "'");
      cfg.action = sub;
    }
    const corrlab::RunResult result = corrlab::run(cfg);
    for (const auto& note : result.notes) std::printf("%s\n", note.c_str());
    for (const auto& artifact : result.artifacts)
      std::printf("wrote %s\n", artifact.path.c_str());
    std::printf("manifest %s\n", result.manifest_path.c_str());
    return 0;
  } catch (const corrlab::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const corrlab::cap_exceeded& e) {
    std::fprintf(stderr, "cap exceeded: %s\n", e.what());
    return 4;
  } catch (const corrlab::numeric_error& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
