#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "rer/mdp.hpp"
#include "rer/qlearn.hpp"

namespace rer::cli {

enum ExitCode : int { kOk = 0, kFail = 1, kUsage = 2 };

/// How `train` obtains its MDP when no file is given.
struct MdpSpec {
  std::string kind = "tabular";  ///< tabular | random_linear | chain
  int num_states = 10;
  int num_actions = 2;
  int dim = 0;  ///< random_linear only; 0 selects num_states * num_actions / 2
  double gamma = 0.9;
  std::optional<std::uint64_t> seed;  ///< defaults to the run seed
};

struct TrainConfig {
  LearnerConfig learner;
  MdpSpec mdp;
  std::optional<std::string> mdp_file;
  int bias_syncs = 0;
  double delta = 0.1;
};

/// JSON Schema (draft 2020-12) for train configuration files.
std::string train_config_schema();

/// Parses and validates a train config document against the schema.  Every
/// offending field is listed in the thrown UsageError.
TrainConfig parse_train_config(const std::string& json_text);

LinearMDP build_mdp(const MdpSpec& spec, std::uint64_t run_seed);

/// Entry point; returns the process exit code.  Diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rer::cli
