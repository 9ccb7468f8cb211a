#include "rer/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rer/errors.hpp"
#include "rer/features.hpp"
#include "rer/report.hpp"
#include "rer/verify.hpp"

namespace rer::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

enum class Kind { Number, Integer, Boolean, String };

struct Field {
  std::string name;
  Kind kind;
  std::optional<double> min;
  std::optional<double> max;
  bool exclusive_min = false;
  bool exclusive_max = false;
  std::vector<std::string> choices;
  std::string description;
};

const std::vector<Field>& learner_fields() {
  static const std::vector<Field> fields = {
      {"eta", Kind::Number, 0.0, 1.0, true, true, {}, "TD step size"},
      {"L", Kind::Integer, 1.0, {}, false, false, {}, "window / batch length"},
      {"N", Kind::Integer, 1.0, {}, false, false, {}, "target sync period in episodes"},
      {"T", Kind::Integer, 0.0, {}, false, false, {}, "number of episodes"},
      {"epsilon_explore", Kind::Number, 0.0, 1.0, false, false, {}, "epsilon-greedy exploration rate"},
      {"seed", Kind::Integer, 0.0, {}, false, false, {}, "run seed; the --seed flag overrides it"},
      {"strategy", Kind::String, {}, {}, false, false, {"ER", "RER"}, "replay strategy"},
      {"episode_length", Kind::Integer, 0.0, {}, false, false, {}, "steps per episode; 0 selects 2L"},
      {"buffer_capacity", Kind::Integer, 1.0, {}, false, false, {}, "replay capacity in transitions"},
      {"window_source", Kind::String, {}, {}, false, false, {"random", "most_recent"},
       "episode a window is drawn from"},
      {"er_batch", Kind::Integer, 0.0, {}, false, false, {}, "ER batch size; 0 selects L"},
      {"track_decomposition", Kind::Boolean, {}, {}, false, false, {}, "record bias and variance norms"},
      {"bias_syncs", Kind::Integer, 0.0, {}, false, false, {}, "length of the bias decay trace; 0 disables it"},
      {"delta", Kind::Number, 0.0, 1.0, true, true, {}, "failure probability of the decay envelope"},
      {"mdp_file", Kind::String, {}, {}, false, false, {}, "path of a serialized MDP"},
  };
  return fields;
}

const std::vector<Field>& mdp_fields() {
  static const std::vector<Field> fields = {
      {"kind", Kind::String, {}, {}, false, false, {"tabular", "random_linear", "chain"}, "MDP family"},
      {"num_states", Kind::Integer, 1.0, {}, false, false, {}, "number of states"},
      {"num_actions", Kind::Integer, 1.0, {}, false, false, {}, "number of actions"},
      {"dim", Kind::Integer, 0.0, {}, false, false, {}, "feature dimension (random_linear); 0 selects SA/2"},
      {"gamma", Kind::Number, 0.0, 1.0, true, true, {}, "discount factor"},
      {"seed", Kind::Integer, 0.0, {}, false, false, {}, "MDP seed; defaults to the run seed"},
  };
  return fields;
}

ordered_json field_schema(const Field& f) {
  ordered_json j;
  switch (f.kind) {
    case Kind::Number: j["type"] = "number"; break;
    case Kind::Integer: j["type"] = "integer"; break;
    case Kind::Boolean: j["type"] = "boolean"; break;
    case Kind::String: j["type"] = "string"; break;
  }
  if (f.min) j[f.exclusive_min ? "exclusiveMinimum" : "minimum"] = *f.min;
  if (f.max) j[f.exclusive_max ? "exclusiveMaximum" : "maximum"] = *f.max;
  if (!f.choices.empty()) j["enum"] = f.choices;
  j["description"] = f.description;
  return j;
}

ordered_json object_schema(const std::vector<Field>& fields) {
  ordered_json props = ordered_json::object();
  for (const auto& f : fields) props[f.name] = field_schema(f);
  return {{"type", "object"}, {"properties", props}, {"additionalProperties", false}};
}

void check_fields(const json& obj, const std::vector<Field>& fields, const std::string& prefix,
                  std::vector<std::string>& problems) {
  for (const auto& [key, value] : obj.items()) {
    const auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return f.name == key; });
    if (it == fields.end()) {
      if (!(prefix.empty() && key == "mdp")) problems.push_back(prefix + key + ": unknown field");
      continue;
    }
    const Field& f = *it;
    const std::string where = prefix + key;
    switch (f.kind) {
      case Kind::Boolean:
        if (!value.is_boolean()) problems.push_back(where + ": expected boolean");
        continue;
      case Kind::String:
        if (!value.is_string()) {
          problems.push_back(where + ": expected string");
        } else if (!f.choices.empty() &&
                   std::find(f.choices.begin(), f.choices.end(), value.get<std::string>()) == f.choices.end()) {
          std::string allowed;
          for (const auto& c : f.choices) allowed += (allowed.empty() ? "" : ", ") + c;
          problems.push_back(where + ": expected one of " + allowed);
        }
        continue;
      case Kind::Integer:
        if (!value.is_number_integer()) {
          problems.push_back(where + ": expected integer");
          continue;
        }
        break;
      case Kind::Number:
        if (!value.is_number()) {
          problems.push_back(where + ": expected number");
          continue;
        }
        break;
    }
    const double x = value.get<double>();
    if (f.min && (f.exclusive_min ? !(x > *f.min) : !(x >= *f.min))) {
      problems.push_back(where + ": must be " + (f.exclusive_min ? "> " : ">= ") + format_double(*f.min));
    }
    if (f.max && (f.exclusive_max ? !(x < *f.max) : !(x <= *f.max))) {
      problems.push_back(where + ": must be " + (f.exclusive_max ? "< " : "<= ") + format_double(*f.max));
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

std::string parse_error_text(const std::exception& e) { return e.what(); }

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << contents;
  if (!f) throw Error("write failed for " + path.string());
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

template <typename Fn>
std::string render(Fn&& fn) {
  std::ostringstream ss;
  fn(ss);
  return ss.str();
}

std::map<std::string, std::string> render_config(const TrainConfig& c, std::uint64_t seed) {
  const LearnerConfig& l = c.learner;
  std::map<std::string, std::string> m{
      {"eta", format_double(l.eta)},
      {"L", std::to_string(l.L)},
      {"N", std::to_string(l.N)},
      {"T", std::to_string(l.T)},
      {"epsilon_explore", format_double(l.epsilon_explore)},
      {"seed", std::to_string(seed)},
      {"strategy", to_string(l.strategy)},
      {"episode_length", std::to_string(l.effective_episode_length())},
      {"buffer_capacity", std::to_string(l.buffer_capacity)},
      {"window_source", l.window_source == WindowSource::Random ? "random" : "most_recent"},
      {"er_batch", std::to_string(l.effective_er_batch())},
      {"track_decomposition", l.track_decomposition ? "true" : "false"},
      {"bias_syncs", std::to_string(c.bias_syncs)},
      {"delta", format_double(c.delta)},
  };
  if (c.mdp_file) {
    m["mdp_file"] = *c.mdp_file;
  } else {
    m["mdp.kind"] = c.mdp.kind;
    m["mdp.num_states"] = std::to_string(c.mdp.num_states);
    m["mdp.num_actions"] = std::to_string(c.mdp.num_actions);
    m["mdp.dim"] = std::to_string(c.mdp.dim);
    m["mdp.gamma"] = format_double(c.mdp.gamma);
    m["mdp.seed"] = std::to_string(c.mdp.seed.value_or(seed));
  }
  return m;
}

}  // namespace

std::string train_config_schema() {
  ordered_json schema = object_schema(learner_fields());
  ordered_json root;
  root["$schema"] = "https://json-schema.org/draft/2020-12/schema";
  root["$id"] = "rer.train_config.v1";
  root["title"] = "train configuration";
  root["type"] = "object";
  ordered_json props = schema["properties"];
  props["mdp"] = object_schema(mdp_fields());
  root["properties"] = props;
  root["additionalProperties"] = false;
  return root.dump(2) + "\n";
}

TrainConfig parse_train_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw UsageError("config must be a JSON object");
  std::vector<std::string> problems;
  check_fields(doc, learner_fields(), "", problems);
  if (doc.contains("mdp")) {
    if (!doc["mdp"].is_object()) {
      problems.push_back("mdp: expected object");
    } else {
      check_fields(doc["mdp"], mdp_fields(), "mdp.", problems);
    }
    if (doc.contains("mdp_file")) problems.push_back("mdp, mdp_file: give at most one");
  }
  if (!problems.empty()) {
    std::string msg = "config schema violations:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw UsageError(msg);
  }

  TrainConfig c;
  LearnerConfig& l = c.learner;
  read(doc, "eta", l.eta);
  read(doc, "L", l.L);
  read(doc, "N", l.N);
  read(doc, "T", l.T);
  read(doc, "epsilon_explore", l.epsilon_explore);
  read(doc, "seed", l.seed);
  if (doc.contains("strategy")) l.strategy = parse_strategy(doc["strategy"].get<std::string>());
  read(doc, "episode_length", l.episode_length);
  read(doc, "buffer_capacity", l.buffer_capacity);
  if (doc.contains("window_source")) {
    l.window_source = doc["window_source"] == "random" ? WindowSource::Random : WindowSource::MostRecent;
  }
  read(doc, "er_batch", l.er_batch);
  read(doc, "track_decomposition", l.track_decomposition);
  read(doc, "bias_syncs", c.bias_syncs);
  read(doc, "delta", c.delta);
  if (doc.contains("mdp_file")) c.mdp_file = doc["mdp_file"].get<std::string>();
  if (doc.contains("mdp")) {
    const json& m = doc["mdp"];
    read(m, "kind", c.mdp.kind);
    read(m, "num_states", c.mdp.num_states);
    read(m, "num_actions", c.mdp.num_actions);
    read(m, "dim", c.mdp.dim);
    read(m, "gamma", c.mdp.gamma);
    if (m.contains("seed")) c.mdp.seed = m["seed"].get<std::uint64_t>();
  }
  try {
    l.validate();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  return c;
}

LinearMDP build_mdp(const MdpSpec& spec, std::uint64_t run_seed) {
  const std::uint64_t seed = spec.seed.value_or(run_seed);
  if (spec.kind == "tabular") return build_tabular(spec.num_states, spec.num_actions, spec.gamma, seed);
  if (spec.kind == "chain") return build_chain(spec.num_states, spec.gamma);
  if (spec.kind == "random_linear") {
    const int dim = spec.dim > 0 ? spec.dim : std::max(1, spec.num_states * spec.num_actions / 2);
    return build_random_linear(dim, spec.num_states, spec.num_actions, spec.gamma, seed);
  }
  throw UsageError("unknown MDP kind '" + spec.kind + "'");
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reverse experience replay verification laboratory", "rerlab"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string config_path;
  auto* seed_opt = app.add_option("--seed", seed, "master seed for all randomness");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--config", config_path, "train configuration file (JSON)");

  auto* verify = app.add_subcommand("verify", "run identity suites and write a verification report");
  std::string suite = "all";
  int max_L = 6;
  verify->add_option("--suite", suite, "all | combinatorics | gamma | decomposition")->capture_default_str();
  verify->add_option("--max-L", max_L, "largest window length checked")->capture_default_str();

  auto* bound = app.add_subcommand("bound-compare", "tabulate the new and previous bound expressions");
  std::vector<double> etas{0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<int> Ls{2, 3, 4, 5, 6, 7, 8, 9, 10};
  bound->add_option("--eta", etas, "comma-separated step sizes in (0, 1)")->delimiter(',');
  bound->add_option("--L", Ls, "comma-separated window lengths")->delimiter(',');

  auto* mc = app.add_subcommand("mc-psd", "Monte Carlo spectrum of E[Gamma^T Gamma]");
  std::string generator = "onehot";
  double mc_eta = 0.1;
  int mc_L = 2;
  int mc_d = 2;
  long trials = 100000;
  double delta = 0.1;
  int env_syncs = 50;
  unsigned workers = 0;
  mc->add_option("--generator", generator, "onehot | gaussian | mdp")->capture_default_str();
  mc->add_option("--eta", mc_eta, "step size in [0, 1)")->capture_default_str();
  mc->add_option("--L", mc_L, "window length")->capture_default_str();
  mc->add_option("--d", mc_d, "feature dimension")->capture_default_str();
  mc->add_option("--trials", trials, "number of sampled windows")->capture_default_str();
  mc->add_option("--delta", delta, "failure probability for the envelope")->capture_default_str();
  mc->add_option("--syncs", env_syncs, "envelope rows 0..syncs")->capture_default_str();
  mc->add_option("--workers", workers, "worker threads; 0 = hardware concurrency");

  auto* train_cmd = app.add_subcommand("train", "run episodic Q-learning with ER or RER");
  std::string mdp_path;
  bool print_schema = false;
  std::string strategy_flag;
  std::optional<int> T_flag;
  std::optional<int> bias_syncs_flag;
  std::string mdp_kind;
  std::optional<int> states_flag, actions_flag;
  std::optional<double> gamma_flag;
  bool save_mdp = false;
  train_cmd->add_option("--mdp", mdp_path, "serialized MDP (JSON); overrides the config's MDP");
  train_cmd->add_flag("--print-schema", print_schema, "print the config schema and exit");
  train_cmd->add_option("--strategy", strategy_flag, "ER | RER");
  train_cmd->add_option("--T", T_flag, "number of episodes");
  train_cmd->add_option("--bias-syncs", bias_syncs_flag, "length of the bias decay trace");
  train_cmd->add_option("--mdp-kind", mdp_kind, "tabular | random_linear | chain");
  train_cmd->add_option("--states", states_flag, "number of states");
  train_cmd->add_option("--actions", actions_flag, "number of actions");
  train_cmd->add_option("--gamma", gamma_flag, "discount factor");
  train_cmd->add_flag("--save-mdp", save_mdp, "also write the MDP used");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << parse_error_text(e) << "\n";
    return kUsage;
  }

  const auto manifest_for = [&](const std::string& command) {
    ExperimentManifest m;
    m.command = command;
    m.seed = seed;
    m.timestamp = utc_timestamp();
    return m;
  };

  try {
    if (*train_cmd && print_schema) {
      out << train_config_schema();
      return kOk;
    }
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());

    if (*verify) {
      const auto reports = run_verify(suite, max_L, seed);
      const fs::path report = dir / "verify_report.json";
      write_file(report, reports_to_json(reports));
      ExperimentManifest m = manifest_for("verify");
      m.config = {{"suite", suite}, {"max_L", std::to_string(max_L)}};
      m.outputs = {report.string()};
      write_file(dir / "verify_manifest.json", manifest_to_json(m));
      const ReportSummary s = summarize(reports);
      out << "verify " << suite << ": " << s.pass << " pass, " << s.fail << " fail, " << s.recorded
          << " recorded\n";
      for (const auto& r : reports) {
        if (r.verdict != Verdict::Fail) continue;
        out << "FAIL " << r.check_id;
        for (const auto& [k, v] : r.inputs) out << ' ' << k << '=' << v;
        out << " oracle=" << r.oracle_value << " formula=" << r.formula_value << "\n";
      }
      return s.fail == 0 ? kOk : kFail;
    }

    if (*bound) {
      if (etas.empty() || Ls.empty()) throw UsageError("grids must be nonempty");
      for (double e : etas) {
        if (!(e > 0.0 && e < 1.0)) throw UsageError("eta grid must lie in (0, 1), got " + format_double(e));
      }
      for (int L : Ls) {
        if (L < 1) throw UsageError("L grid must be positive");
      }
      const auto rows = bound_compare_grid(etas, Ls);
      const fs::path csv = dir / "bound_grid.csv";
      write_file(csv, render([&](std::ostream& os) { write_grid_csv(os, rows); }));
      ExperimentManifest m = manifest_for("bound-compare");
      std::string e_list, l_list;
      for (double e : etas) e_list += (e_list.empty() ? "" : ",") + format_double(e);
      for (int L : Ls) l_list += (l_list.empty() ? "" : ",") + std::to_string(L);
      m.config = {{"eta", e_list}, {"L", l_list}};
      m.outputs = {csv.string()};
      write_file(dir / "bound_grid_manifest.json", manifest_to_json(m));
      out << "bound-compare: " << rows.size() << " rows\n";
      return kOk;
    }

    if (*mc) {
      if (!(mc_eta >= 0.0 && mc_eta < 1.0)) throw UsageError("eta must lie in [0, 1)");
      if (mc_L < 1 || mc_d < 1 || trials < 1) throw UsageError("L, d and trials must be positive");
      if (!(delta > 0.0 && delta < 1.0)) throw UsageError("delta must lie in (0, 1)");
      if (env_syncs < 0) throw UsageError("syncs must be >= 0");
      const auto gen = make_generator(generator, mc_d, child_seed(seed, 0));
      const BoundReport rep = mc_gram_spectrum(*gen, mc_eta, mc_L, trials, child_seed(seed, 1), workers);
      const fs::path csv = dir / "bound_report.csv";
      const fs::path env = dir / "envelope.csv";
      write_file(csv, render([&](std::ostream& os) { write_bound_report_csv(os, std::span(&rep, 1)); }));
      write_file(env, render([&](std::ostream& os) { write_envelope_csv(os, mc_eta, mc_L, rep.kappa, delta, env_syncs); }));
      ExperimentManifest m = manifest_for("mc-psd");
      m.config = {{"generator", generator}, {"eta", format_double(mc_eta)}, {"L", std::to_string(mc_L)},
                  {"d", std::to_string(mc_d)}, {"trials", std::to_string(trials)},
                  {"delta", format_double(delta)}, {"syncs", std::to_string(env_syncs)}};
      m.outputs = {csv.string(), env.string()};
      write_file(dir / "mc_psd_manifest.json", manifest_to_json(m));
      out << "mc-psd: lambda_max=" << format_double(rep.lambda_max) << " +/- " << format_double(rep.lambda_max_stderr)
          << " holds_trivial=" << (rep.holds_trivial ? "true" : "false") << "\n";
      return kOk;
    }

    // train
    TrainConfig cfg = config_path.empty() ? parse_train_config("{}") : parse_train_config(read_file(config_path));
    if (*seed_opt) cfg.learner.seed = seed;
    seed = cfg.learner.seed;
    if (!strategy_flag.empty()) {
      try {
        cfg.learner.strategy = parse_strategy(strategy_flag);
      } catch (const ValidationError& e) {
        throw UsageError(e.what());
      }
    }
    if (T_flag) cfg.learner.T = *T_flag;
    if (bias_syncs_flag) cfg.bias_syncs = *bias_syncs_flag;
    if (!mdp_kind.empty()) cfg.mdp.kind = mdp_kind;
    if (states_flag) cfg.mdp.num_states = *states_flag;
    if (actions_flag) cfg.mdp.num_actions = *actions_flag;
    if (gamma_flag) cfg.mdp.gamma = *gamma_flag;
    if (!mdp_path.empty()) cfg.mdp_file = mdp_path;
    try {
      cfg.learner.validate();
    } catch (const ValidationError& e) {
      throw UsageError(e.what());
    }
    if (cfg.bias_syncs < 0) throw UsageError("bias_syncs must be >= 0");

    std::unique_ptr<LinearMDP> mdp;
    if (cfg.mdp_file) {
      try {
        mdp = std::make_unique<LinearMDP>(mdp_from_json(read_file(*cfg.mdp_file)));
      } catch (const ValidationError& e) {
        throw UsageError(std::string("MDP file: ") + e.what());
      }
    } else {
      try {
        mdp = std::make_unique<LinearMDP>(build_mdp(cfg.mdp, seed));
      } catch (const ConstructionError& e) {
        throw UsageError(std::string("MDP parameters: ") + e.what());
      }
    }

    const RunMetrics metrics = train(*mdp, cfg.learner);
    ExperimentManifest m = manifest_for("train");
    m.config = render_config(cfg, seed);
    const fs::path csv = dir / "metrics.csv";
    write_file(csv, render([&](std::ostream& os) { write_metrics_csv(os, metrics.episodes); }));
    m.outputs.push_back(csv.string());
    if (cfg.bias_syncs > 0) {
      Vector x0 = Vector::Ones(mdp->dim()) / std::sqrt(static_cast<double>(mdp->dim()));
      const BiasDecayTrace trace = bias_decay_trace(*mdp, cfg.learner, x0, cfg.bias_syncs);
      const auto rows = bias_decay_report(trace, cfg.learner.eta, cfg.learner.L, cfg.delta);
      const fs::path bias = dir / "bias_decay.csv";
      write_file(bias, render([&](std::ostream& os) { write_bias_decay_csv(os, rows); }));
      m.outputs.push_back(bias.string());
    }
    if (save_mdp) {
      const fs::path mp = dir / "mdp.json";
      write_file(mp, mdp_to_json(*mdp));
      m.outputs.push_back(mp.string());
    }
    write_file(dir / "train_manifest.json", manifest_to_json(m));
    out << "train " << to_string(cfg.learner.strategy) << ": " << metrics.episodes.size() << " episodes";
    if (!metrics.episodes.empty()) out << ", final sup_error=" << format_double(metrics.episodes.back().sup_error);
    out << "\n";
    return kOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFail;
  }
}

}  // namespace rer::cli
