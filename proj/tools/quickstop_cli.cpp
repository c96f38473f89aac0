// quickstop: train, solve, detect, simulate, evaluate, sweep.

#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"

#include "quickstop/detector.hpp"
#include "quickstop/error.hpp"
#include "quickstop/evaluation.hpp"
#include "quickstop/io.hpp"
#include "quickstop/random.hpp"
#include "quickstop/training.hpp"

namespace {

using namespace quickstop;
using io::json;

enum ExitCode : int { kOk = 0, kInternal = 1, kUsage = 2, kData = 3, kConvergence = 4 };

struct CostFlags {
  double type1 = 10.0;
  double type2 = 10.0;
  double step = 0.05;
  double prior = 0.5;

  void add(CLI::App* cmd) {
    cmd->add_option("--cI", type1, "Cost of a false positive (news declared misinformation)")->capture_default_str();
    cmd->add_option("--cII", type2, "Cost of a false negative (misinformation declared news)")->capture_default_str();
    cmd->add_option("--c", step, "Propagation cost per observation under misinformation")->capture_default_str();
    cmd->add_option("--prior", prior, "Prior probability of misinformation, in (0,1)")->capture_default_str();
  }

  CostConfig config() const {
    CostConfig c{type1, type2, step, prior};
    c.validate();
    return c;
  }
};

struct SolverFlags {
  SolverConfig config;

  void add(CLI::App* cmd) {
    cmd->add_option("--grid", config.grid_step, "Belief grid step")->capture_default_str();
    cmd->add_option("--tol", config.tolerance, "Value-iteration tolerance")->capture_default_str();
    cmd->add_option("--max-iter", config.max_iterations, "Value-iteration iteration cap")->capture_default_str();
  }
};

struct SyntheticFlags {
  SyntheticConfig config;

  void add(CLI::App* cmd) {
    cmd->add_option("--nodes", config.node_count, "Network size")->capture_default_str();
    cmd->add_option("--edges-per-node", config.edges_per_node, "Attachments per new node")->capture_default_str();
    cmd->add_option("--same-type-prob", config.same_type_prob, "Probability an attachment targets the own type")
        ->capture_default_str();
    cmd->add_option("--traces", config.trace_count, "Number of traces")->capture_default_str();
    cmd->add_option("--trace-prior", config.prior, "Fraction of misinformation traces")->capture_default_str();
    cmd->add_option("--max-events", config.max_events, "Cascade truncation length")->capture_default_str();
    cmd->add_option("--seed", config.seed, "Random seed")->capture_default_str();
  }
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("'" + item + "' is not a number");
    }
  }
  if (out.empty()) throw InvalidArgument("empty number list");
  return out;
}

std::vector<double> arithmetic_grid(double from, double to, double step) {
  if (!(step > 0.0) || to < from) throw InvalidArgument("grid needs step > 0 and to >= from");
  const long count = std::lround((to - from) / step) + 1;
  std::vector<double> out;
  for (long i = 0; i < count; ++i) out.push_back(from + static_cast<double>(i) * step);
  return out;
}

std::string default_report_path(const std::string& output) {
  const auto dot = output.rfind(".json");
  if (dot != std::string::npos && dot + 5 == output.size()) return output.substr(0, dot) + ".report.json";
  return output + ".report.json";
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

// ---- train --------------------------------------------------------------

struct TrainArgs {
  std::string input;
  std::string output;
  std::string report;
  std::string test_out;
  int classes = 4;
  std::string boundaries;
  double smoothing = 1.0;
  std::optional<std::uint64_t> split_seed;
  double train_fraction = 0.8;
  double l2 = ScorerTrainingConfig{}.l2;
};

void run_train(const TrainArgs& a) {
  const std::string bytes = io::read_file(a.input);
  std::istringstream in(bytes);
  std::vector<Trace> traces = io::read_traces(in);
  if (traces.empty()) throw DataError("'" + a.input + "' contains no traces");
  for (const auto& t : traces) {
    if (!t.label) throw DataError("trace '" + t.id + "' is unlabeled; training needs labels");
    if (t.has_features() != traces.front().has_features()) {
      throw DataError("training set mixes classified and feature-bearing traces");
    }
  }

  std::vector<Trace> test;
  if (a.split_seed) {
    if (!(a.train_fraction > 0.0 && a.train_fraction < 1.0)) {
      throw InvalidArgument("--train-fraction must lie in (0,1)");
    }
    RandomStream rng(*a.split_seed);
    for (std::size_t i = traces.size(); i > 1; --i) std::swap(traces[i - 1], traces[rng.below(i)]);
    const auto keep = static_cast<std::size_t>(std::lround(a.train_fraction * traces.size()));
    test.assign(traces.begin() + static_cast<long>(keep), traces.end());
    traces.resize(keep);
  }

  const Quantizer quantizer =
      a.boundaries.empty() ? Quantizer::uniform(a.classes) : Quantizer(parse_list(a.boundaries));
  if (quantizer.class_count() != a.classes) {
    throw InvalidArgument("--boundaries must list exactly classes-1 values");
  }

  EdgeScorer scorer = EdgeScorer::precomputed();
  if (traces.front().has_features()) {
    ScorerTrainingConfig cfg;
    cfg.l2 = a.l2;
    scorer = train_scorer(traces, cfg);
    for (auto& t : traces) t = classify_trace(scorer, quantizer, t);
  }

  const TrainingReport report = estimate_transitions(traces, a.classes, a.smoothing);
  if (!report.model) {
    const auto& [label, cls] = report.undefined_rows.front();
    throw DataError("class " + std::to_string(cls) + " is never a transition source in " + to_string(label) +
                    " traces; its transition row is undefined without smoothing");
  }

  io::ModelArtifact artifact{*report.model, quantizer, scorer,
                             io::Provenance{a.split_seed, io::fnv1a_hex(bytes), "train"}};
  io::write_json_file(a.output, io::to_json(artifact));
  io::write_json_file(a.report.empty() ? default_report_path(a.output) : a.report, io::to_json(report));
  if (!a.test_out.empty()) {
    std::ofstream out(a.test_out);
    if (!out) throw DataError("cannot write '" + a.test_out + "'");
    io::write_traces(out, test);
  }
}

// ---- solve --------------------------------------------------------------

void run_solve(const std::string& input, const std::string& output, const CostFlags& costs,
               const SolverFlags& solver) {
  const CostConfig cc = costs.config();
  solver.config.validate();
  const std::string bytes = io::read_file(input);
  io::json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    throw DataError("'" + input + "' is not valid JSON: " + e.what());
  }
  const io::ModelArtifact model = io::model_from_json(j);
  io::PolicyArtifact policy{make_policy(model.model, cc, solver.config), model.quantizer, model.scorer,
                            io::Provenance{model.provenance.seed, io::fnv1a_hex(bytes), "solve"}};
  io::write_json_file(output, io::to_json(policy));
}

// ---- detect -------------------------------------------------------------

class StreamDetector {
 public:
  StreamDetector(const io::PolicyArtifact& artifact, double prior, std::ostream& out, std::ostream& err)
      : artifact_(artifact), prior_(prior), out_(out), err_(err) {
    new_detector(artifact_.policy, prior_);  // validates the prior once
  }

  void line(const std::string& text, long number) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(number) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("trace_id") || !j.at("trace_id").is_string()) {
      throw DataError("line " + std::to_string(number) + ": missing string trace_id");
    }
    const std::string id = j.at("trace_id").get<std::string>();
    try {
      if (j.contains("events")) {
        const Trace t = io::trace_from_json(j);
        // events after the verdict within one record are not consumed
        for (std::size_t k = 0; k < t.size(); ++k) {
          if (!event(id, event_class(t, k), number)) break;
        }
      } else {
        event(id, event_class(j), number);
      }
    } catch (const InvalidArgument& e) {
      throw DataError("line " + std::to_string(number) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(number) + ": " + e.what());
    }
  }

  /// Traces still running at end of input get a forced verdict.
  void finish() {
    for (const std::string& id : order_) {
      Slot& s = slots_.at(id);
      if (!s.done) emit(id, verdict_of(artifact_.policy, s.state));
    }
  }

 private:
  struct Slot {
    DetectorState state;
    bool done = false;
  };

  EdgeClass event_class(const Trace& t, std::size_t k) const {
    if (t.has_classes()) return t.classes()[k];
    const auto& f = t.features()[k];
    return classify_edge(artifact_.scorer, artifact_.quantizer, f.src, f.dst);
  }

  EdgeClass event_class(const json& j) const {
    if (j.contains("class")) {
      if (!j.at("class").is_number_integer()) throw DataError("event class must be an integer");
      return EdgeClass(j.at("class").get<int>());
    }
    if (j.contains("src_features") && j.contains("dst_features")) {
      const auto src = j.at("src_features").get<std::vector<double>>();
      const auto dst = j.at("dst_features").get<std::vector<double>>();
      return classify_edge(artifact_.scorer, artifact_.quantizer,
                           Eigen::Map<const VectorXd>(src.data(), static_cast<Eigen::Index>(src.size())),
                           Eigen::Map<const VectorXd>(dst.data(), static_cast<Eigen::Index>(dst.size())));
    }
    throw DataError("event needs 'class' or 'src_features' and 'dst_features'");
  }

  // Returns false when the event was dropped or ended the trace.
  bool event(const std::string& id, EdgeClass z, long number) {
    auto it = slots_.find(id);
    if (it == slots_.end()) {
      it = slots_.emplace(id, Slot{new_detector(artifact_.policy, prior_), false}).first;
      order_.push_back(id);
    }
    Slot& s = it->second;
    if (s.done) {
      err_ << "warning: line " << number << ": trace '" << id << "' already has a verdict; event dropped\n";
      return false;
    }
    s.state = observe(artifact_.policy, s.state, z);
    if (!s.state.running()) {
      emit(id, verdict_of(artifact_.policy, s.state));
      return false;
    }
    return true;
  }

  void emit(const std::string& id, const Verdict& v) {
    slots_.at(id).done = true;
    json j = {{"trace_id", id},
              {"decision", to_string(v.decision)},
              {"label", to_int(v.decision)},
              {"T", v.stopping_time},
              {"belief", v.final_belief},
              {"forced", v.forced}};
    out_ << j.dump() << '\n';
    out_.flush();
  }

  const io::PolicyArtifact& artifact_;
  double prior_;
  std::ostream& out_;
  std::ostream& err_;
  std::unordered_map<std::string, Slot> slots_;
  std::vector<std::string> order_;
};

void run_detect(const std::string& policy_path, std::optional<double> prior, const std::string& input) {
  const io::PolicyArtifact artifact = io::policy_from_json(io::read_json_file(policy_path));
  StreamDetector detector(artifact, prior.value_or(artifact.policy.costs.prior), std::cout, std::cerr);
  std::ifstream file;
  if (!input.empty() && input != "-") {
    file.open(input);
    if (!file) throw DataError("cannot open '" + input + "'");
  }
  std::istream& in = file.is_open() ? static_cast<std::istream&>(file) : std::cin;
  std::string text;
  long number = 0;
  while (std::getline(in, text)) {
    ++number;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    detector.line(text, number);
  }
  detector.finish();
}

// ---- simulate -----------------------------------------------------------

void run_simulate(const SyntheticConfig& config, double noise, bool features, const std::string& output,
                  const std::string& manifest) {
  config.validate();
  if (!(noise >= 0.0 && noise <= 1.0)) throw InvalidArgument("--noise must lie in [0,1]");
  if (features && noise > 0.0) throw InvalidArgument("--noise applies to class-bearing traces only");
  const SyntheticNetwork network = generate_network(config);
  const auto cascades = simulate_cascades(network, config, RandomStream::derive(config.seed, 0x747261).next());
  std::ostringstream text;
  for (std::size_t i = 0; i < cascades.size(); ++i) {
    const std::string id = "sim-" + std::to_string(i);
    Trace t = features ? to_feature_trace(cascades[i], network, id) : to_trace(cascades[i], id);
    if (!features && noise > 0.0) {
      t = inject_noise(t, noise, 4, RandomStream::derive(config.seed ^ 0x6e31, i).next());
    }
    text << io::to_json(t).dump() << '\n';
  }
  write_text(output, text.str());
  if (!manifest.empty()) {
    json m = {{"format_version", io::kFormatVersion},
              {"kind", "quickstop-simulation"},
              {"config", io::to_json(config)},
              {"misclass_prob", noise},
              {"features", features},
              {"traces_hash", io::fnv1a_hex(text.str())}};
    io::write_json_file(manifest, m);
  }
}

// ---- evaluate -----------------------------------------------------------

std::vector<Trace> classified(const io::PolicyArtifact& artifact, std::vector<Trace> traces) {
  for (auto& t : traces) t = classify_trace(artifact.scorer, artifact.quantizer, t);
  return traces;
}

void run_evaluate(const std::string& policy_path, const std::string& traces_path, std::optional<double> prior,
                  const std::string& output) {
  const io::PolicyArtifact artifact = io::policy_from_json(io::read_json_file(policy_path));
  const auto traces = classified(artifact, io::read_traces_file(traces_path));
  if (traces.empty()) throw DataError("'" + traces_path + "' contains no traces");
  const MetricsReport m = evaluate(artifact.policy, traces, prior.value_or(artifact.policy.costs.prior));
  write_text(output, io::to_json(m).dump(2) + "\n");
}

// ---- sweep --------------------------------------------------------------

struct CostSweepArgs {
  std::string model;
  std::string traces;
  int markov_traces = 0;
  int markov_length = 200;
  std::uint64_t seed = 1;
  double from = 0.05;
  double to = 1.2;
  double step = 0.05;
  std::string output;
};

void run_cost_sweep(const CostSweepArgs& a, const CostFlags& costs, const SolverFlags& solver) {
  const CostConfig base = costs.config();
  const io::ModelArtifact model = io::model_from_json(io::read_json_file(a.model));
  std::vector<Trace> traces;
  if (!a.traces.empty()) {
    traces = io::read_traces_file(a.traces);
    for (auto& t : traces) t = classify_trace(model.scorer, model.quantizer, t);
  } else if (a.markov_traces > 0) {
    traces = sample_markov_mixture(model.model, a.markov_traces, a.markov_length, base.prior, a.seed);
  } else {
    throw InvalidArgument("sweep c needs --traces or --markov-traces");
  }
  if (traces.empty()) throw DataError("no traces to evaluate");
  const auto rows = cost_sweep(model.model, base, arithmetic_grid(a.from, a.to, a.step), traces, solver.config);
  std::ostringstream out;
  io::write_cost_sweep_csv(out, rows);
  write_text(a.output, out.str());
}

void run_noise_sweep(const SyntheticConfig& synthetic, const std::string& noise, const CostFlags& costs,
                     const SolverFlags& solver, double smoothing, const std::string& output) {
  NoiseSweepConfig cfg;
  cfg.synthetic = synthetic;
  cfg.costs = costs.config();
  cfg.solver = solver.config;
  cfg.smoothing = smoothing;
  cfg.misclass_probs = parse_list(noise);
  const auto rows = noise_sweep(cfg);
  std::ostringstream out;
  io::write_noise_sweep_csv(out, rows);
  write_text(output, out.str());
}

// ---- oracle -------------------------------------------------------------

void run_oracle(const std::string& policy_path, int horizon, std::optional<double> prior) {
  const io::PolicyArtifact artifact = io::policy_from_json(io::read_json_file(policy_path));
  const OracleResult r = brute_force_optimal(artifact.policy, prior.value_or(artifact.policy.costs.prior), horizon);
  std::cout << io::to_json(r).dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quickest misinformation detection: training, threshold solving, online detection"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Estimate transition matrices from labeled traces");
  train_cmd->add_option("traces", train.input, "Trace JSONL file")->required();
  train_cmd->add_option("-o,--output", train.output, "Model JSON output")->required();
  train_cmd->add_option("--report", train.report, "Training report output (default: output path with .json replaced by .report.json)");
  train_cmd->add_option("--test-out", train.test_out, "Write the held-out split here");
  train_cmd->add_option("--classes", train.classes, "Number of edge classes")->capture_default_str();
  train_cmd->add_option("--boundaries", train.boundaries, "Comma-separated score bin edges");
  train_cmd->add_option("--smoothing", train.smoothing, "Additive smoothing for transition counts")
      ->capture_default_str();
  train_cmd->add_option("--split-seed", train.split_seed, "Shuffle and hold out a test split with this seed");
  train_cmd->add_option("--train-fraction", train.train_fraction, "Training share of the split")
      ->capture_default_str();
  train_cmd->add_option("--l2", train.l2, "Scorer L2 regularization")->capture_default_str();

  std::string solve_in;
  std::string solve_out;
  CostFlags solve_costs;
  SolverFlags solve_solver;
  auto* solve_cmd = app.add_subcommand("solve", "Solve the stopping thresholds for a model");
  solve_cmd->add_option("model", solve_in, "Model JSON")->required();
  solve_cmd->add_option("-o,--output", solve_out, "Policy JSON output")->required();
  solve_costs.add(solve_cmd);
  solve_solver.add(solve_cmd);

  std::string detect_policy;
  std::string detect_input;
  std::optional<double> detect_prior;
  auto* detect_cmd = app.add_subcommand("detect", "Stream events from stdin and emit verdicts");
  detect_cmd->add_option("policy", detect_policy, "Policy JSON")->required();
  detect_cmd->add_option("-i,--input", detect_input, "Read events from a file instead of stdin");
  detect_cmd->add_option("--prior", detect_prior, "Override the policy prior");

  SyntheticFlags sim;
  double sim_noise = 0.0;
  bool sim_features = false;
  std::string sim_out;
  std::string sim_manifest;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate synthetic gossiper/messenger cascades");
  sim.add(sim_cmd);
  sim_cmd->add_option("--noise", sim_noise, "Edge misclassification probability")->capture_default_str();
  sim_cmd->add_flag("--features", sim_features, "Emit one-hot node-type features instead of classes");
  sim_cmd->add_option("-o,--output", sim_out, "Trace JSONL output (default stdout)");
  sim_cmd->add_option("--manifest", sim_manifest, "Write the configuration manifest here");

  std::string eval_policy;
  std::string eval_traces;
  std::optional<double> eval_prior;
  std::string eval_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "Run the detector over labeled traces");
  eval_cmd->add_option("policy", eval_policy, "Policy JSON")->required();
  eval_cmd->add_option("traces", eval_traces, "Trace JSONL")->required();
  eval_cmd->add_option("--prior", eval_prior, "Override the policy prior");
  eval_cmd->add_option("-o,--output", eval_out, "Metrics JSON output (default stdout)");

  auto* sweep_cmd = app.add_subcommand("sweep", "Parameter sweeps written as CSV");
  sweep_cmd->require_subcommand(1);
  CostSweepArgs cs;
  CostFlags cs_costs;
  SolverFlags cs_solver;
  auto* cs_cmd = sweep_cmd->add_subcommand("c", "Sweep the propagation cost");
  cs_cmd->add_option("--model", cs.model, "Model JSON")->required();
  cs_cmd->add_option("--traces", cs.traces, "Labeled trace JSONL");
  cs_cmd->add_option("--markov-traces", cs.markov_traces, "Sample this many traces from the model instead");
  cs_cmd->add_option("--markov-length", cs.markov_length, "Length of sampled traces")->capture_default_str();
  cs_cmd->add_option("--seed", cs.seed, "Seed for sampled traces")->capture_default_str();
  cs_cmd->add_option("--from", cs.from, "First c")->capture_default_str();
  cs_cmd->add_option("--to", cs.to, "Last c")->capture_default_str();
  cs_cmd->add_option("--step", cs.step, "c increment")->capture_default_str();
  cs_cmd->add_option("-o,--output", cs.output, "CSV output (default stdout)");
  cs_costs.add(cs_cmd);
  cs_solver.add(cs_cmd);

  SyntheticFlags ns;
  std::string ns_noise = "0,0.1,0.2,0.3,0.4,0.5";
  CostFlags ns_costs;
  ns_costs.step = 0.3;
  SolverFlags ns_solver;
  double ns_smoothing = 1.0;
  std::string ns_out;
  auto* ns_cmd = sweep_cmd->add_subcommand("noise", "Synthetic end-to-end sweep over misclassification");
  ns.add(ns_cmd);
  ns_cmd->add_option("--noise", ns_noise, "Comma-separated misclassification probabilities")
      ->capture_default_str();
  ns_cmd->add_option("--smoothing", ns_smoothing, "Additive smoothing for transition counts")
      ->capture_default_str();
  ns_cmd->add_option("-o,--output", ns_out, "CSV output (default stdout)");
  ns_costs.add(ns_cmd);
  ns_solver.add(ns_cmd);

  std::string oracle_policy;
  int oracle_horizon = 6;
  std::optional<double> oracle_prior;
  auto* oracle_cmd = app.add_subcommand("oracle", "Compare the policy with the exact finite-horizon optimum");
  oracle_cmd->add_option("policy", oracle_policy, "Policy JSON")->required();
  oracle_cmd->add_option("--horizon", oracle_horizon, "History length L")->capture_default_str();
  oracle_cmd->add_option("--prior", oracle_prior, "Override the policy prior");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) run_train(train);
    if (*solve_cmd) run_solve(solve_in, solve_out, solve_costs, solve_solver);
    if (*detect_cmd) run_detect(detect_policy, detect_prior, detect_input);
    if (*sim_cmd) run_simulate(sim.config, sim_noise, sim_features, sim_out, sim_manifest);
    if (*eval_cmd) run_evaluate(eval_policy, eval_traces, eval_prior, eval_out);
    if (*cs_cmd) run_cost_sweep(cs, cs_costs, cs_solver);
    if (*ns_cmd) run_noise_sweep(ns.config, ns_noise, ns_costs, ns_solver, ns_smoothing, ns_out);
    if (*oracle_cmd) run_oracle(oracle_policy, oracle_horizon, oracle_prior);
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << '\n';
    return kConvergence;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}
