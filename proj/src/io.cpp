#include "quickstop/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "quickstop/error.hpp"

namespace quickstop::io {

namespace {

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j, const char* name) {
  if (!j.is_array() || j.empty()) throw DataError(std::string(name) + " must be a nonempty array of rows");
  const std::size_t cols = j.front().size();
  MatrixXd m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw DataError(std::string(name) + " rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json vector_to_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

VectorXd vector_from_json(const json& j, const char* name) {
  if (!j.is_array()) throw DataError(std::string(name) + " must be an array");
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw DataError(std::string(name) + " entries must be numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

// NaN is not representable in JSON
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json model_to_json(const TransitionModel& m) {
  return {{"class_count", m.class_count()},
          {"alpha0", matrix_to_json(m.alpha0())},
          {"alpha1", matrix_to_json(m.alpha1())}};
}

TransitionModel transition_model_from_json(const json& j) {
  TransitionModel m(matrix_from_json(j.at("alpha0"), "alpha0"), matrix_from_json(j.at("alpha1"), "alpha1"));
  if (j.contains("class_count") && j.at("class_count").get<int>() != m.class_count()) {
    throw DataError("class_count disagrees with matrix shape");
  }
  return m;
}

json scorer_to_json(const EdgeScorer& s) {
  if (s.kind() == ScorerKind::Precomputed) return {{"kind", "precomputed"}};
  return {{"kind", "linear"},
          {"weights", vector_to_json(s.weights())},
          {"bias", s.bias()},
          {"src_dim", s.src_dim()}};
}

EdgeScorer scorer_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "precomputed") return EdgeScorer::precomputed();
  if (kind == "linear") {
    return EdgeScorer::linear(vector_from_json(j.at("weights"), "weights"), j.at("bias").get<double>(),
                              j.at("src_dim").get<int>());
  }
  throw DataError("unknown scorer kind '" + kind + "'");
}

json provenance_to_json(const Provenance& p) {
  json j = {{"data_hash", p.data_hash}, {"command", p.command}};
  j["seed"] = p.seed ? json(*p.seed) : json(nullptr);
  return j;
}

Provenance provenance_from_json(const json& j) {
  Provenance p;
  if (j.contains("seed") && !j.at("seed").is_null()) p.seed = j.at("seed").get<std::uint64_t>();
  p.data_hash = j.value("data_hash", "");
  p.command = j.value("command", "");
  return p;
}

void check_version(const json& j, const char* kind) {
  if (!j.is_object()) throw DataError(std::string(kind) + " artifact must be a JSON object");
  const int v = j.value("format_version", -1);
  if (v != kFormatVersion) {
    throw DataError(std::string(kind) + " artifact has format_version " + std::to_string(v) +
                    ", expected " + std::to_string(kFormatVersion));
  }
  if (j.value("kind", "") != std::string("quickstop-") + kind) {
    throw DataError(std::string("artifact is not a quickstop ") + kind);
  }
}

template <typename Fn>
auto wrap_json_errors(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed artifact: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("invalid artifact: ") + e.what());
  }
}

}  // namespace

json to_json(const Trace& trace) {
  json events = json::array();
  const bool truth = !trace.true_classes.empty();
  for (std::size_t k = 0; k < trace.size(); ++k) {
    json e;
    if (trace.has_classes()) {
      e["class"] = trace.classes()[k].value();
    } else {
      e["src_features"] = vector_to_json(trace.features()[k].src);
      e["dst_features"] = vector_to_json(trace.features()[k].dst);
    }
    if (truth) e["true_class"] = trace.true_classes[k].value();
    events.push_back(std::move(e));
  }
  json j = {{"trace_id", trace.id}, {"events", std::move(events)}};
  j["label"] = trace.label ? json(to_int(*trace.label)) : json(nullptr);
  return j;
}

Trace trace_from_json(const json& j) {
  if (!j.is_object()) throw DataError("trace must be a JSON object");
  Trace t;
  if (!j.contains("trace_id") || !j.at("trace_id").is_string()) throw DataError("trace_id must be a string");
  t.id = j.at("trace_id").get<std::string>();
  if (j.contains("label") && !j.at("label").is_null()) {
    if (!j.at("label").is_number_integer()) throw DataError("label must be 0, 1 or null");
    try {
      t.label = hypothesis_from_int(j.at("label").get<int>());
    } catch (const InvalidArgument& e) {
      throw DataError(e.what());
    }
  }
  if (!j.contains("events") || !j.at("events").is_array()) throw DataError("events must be an array");
  const json& ev = j.at("events");
  if (ev.empty()) throw DataError("trace '" + t.id + "' has no events");
  const bool classified = ev.front().contains("class");
  ClassEvents classes;
  FeatureEvents features;
  for (const json& e : ev) {
    if (!e.is_object()) throw DataError("event must be a JSON object");
    const bool has_class = e.contains("class");
    const bool has_features = e.contains("src_features") || e.contains("dst_features");
    if (has_class == has_features || has_class != classified) {
      throw DataError("trace '" + t.id + "' mixes classified and feature-bearing events");
    }
    if (has_class) {
      if (!e.at("class").is_number_integer()) throw DataError("event class must be an integer");
      const int z = e.at("class").get<int>();
      if (z < 0) throw DataError("event class must be nonnegative");
      classes.emplace_back(z);
    } else {
      features.push_back({vector_from_json(e.at("src_features"), "src_features"),
                          vector_from_json(e.at("dst_features"), "dst_features")});
    }
    if (e.contains("true_class")) t.true_classes.emplace_back(e.at("true_class").get<int>());
  }
  if (classified) {
    t.events = std::move(classes);
  } else {
    t.events = std::move(features);
  }
  t.validate();
  return t;
}

std::vector<Trace> read_traces(std::istream& in) {
  std::vector<Trace> out;
  std::string line;
  long number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(trace_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(number) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Trace> read_traces_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_traces(in);
}

void write_traces(std::ostream& out, std::span<const Trace> traces) {
  for (const Trace& t : traces) out << to_json(t).dump() << '\n';
}

json to_json(const ModelArtifact& a) {
  return {{"format_version", kFormatVersion},
          {"kind", "quickstop-model"},
          {"model", model_to_json(a.model)},
          {"quantizer", {{"boundaries", a.quantizer.boundaries()}}},
          {"scorer", scorer_to_json(a.scorer)},
          {"provenance", provenance_to_json(a.provenance)}};
}

ModelArtifact model_from_json(const json& j) {
  return wrap_json_errors([&] {
    check_version(j, "model");
    ModelArtifact a{transition_model_from_json(j.at("model")),
                    Quantizer(j.at("quantizer").at("boundaries").get<std::vector<double>>()),
                    scorer_from_json(j.at("scorer")), provenance_from_json(j.value("provenance", json::object()))};
    if (a.quantizer.class_count() != a.model.class_count()) {
      throw DataError("quantizer class count disagrees with the model");
    }
    return a;
  });
}

json to_json(const PolicyArtifact& a) {
  const Policy& p = a.policy;
  json values = json::array();
  const auto& vf = p.thresholds.value_function.values();
  for (Eigen::Index z = 0; z < vf.rows(); ++z) {
    json row = json::array();
    for (Eigen::Index i = 0; i < vf.cols(); ++i) row.push_back(vf(z, i));
    values.push_back(std::move(row));
  }
  return {{"format_version", kFormatVersion},
          {"kind", "quickstop-policy"},
          {"model", model_to_json(p.model)},
          {"quantizer", {{"boundaries", a.quantizer.boundaries()}}},
          {"scorer", scorer_to_json(a.scorer)},
          {"costs", {{"c_I", p.costs.type1}, {"c_II", p.costs.type2}, {"c", p.costs.step}, {"prior", p.costs.prior}}},
          {"solver",
           {{"grid_step", p.solver.grid_step},
            {"tolerance", p.solver.tolerance},
            {"max_iterations", p.solver.max_iterations}}},
          {"thresholds", {{"lower", p.thresholds.lower}, {"upper", p.thresholds.upper}}},
          {"solver_result", {{"iterations", p.thresholds.iterations}, {"residual", p.thresholds.residual}}},
          {"value_function", std::move(values)},
          {"provenance", provenance_to_json(a.provenance)}};
}

PolicyArtifact policy_from_json(const json& j) {
  return wrap_json_errors([&] {
    check_version(j, "policy");
    PolicyArtifact a{Policy{transition_model_from_json(j.at("model")), {}, {}, {}},
                     Quantizer(j.at("quantizer").at("boundaries").get<std::vector<double>>()),
                     scorer_from_json(j.at("scorer")),
                     provenance_from_json(j.value("provenance", json::object()))};
    Policy& p = a.policy;
    const json& c = j.at("costs");
    p.costs = CostConfig{c.at("c_I").get<double>(), c.at("c_II").get<double>(), c.at("c").get<double>(),
                         c.at("prior").get<double>()};
    p.costs.validate();
    const json& s = j.at("solver");
    p.solver = SolverConfig{s.at("grid_step").get<double>(), s.at("tolerance").get<double>(),
                            s.at("max_iterations").get<long>()};
    p.solver.validate();
    p.thresholds.lower = j.at("thresholds").at("lower").get<std::vector<double>>();
    p.thresholds.upper = j.at("thresholds").at("upper").get<std::vector<double>>();
    p.thresholds.iterations = j.at("solver_result").at("iterations").get<long>();
    p.thresholds.residual = j.at("solver_result").at("residual").get<double>();
    p.thresholds.value_function = ValueFunction(matrix_from_json(j.at("value_function"), "value_function"));

    const int classes = p.model.class_count();
    if (p.thresholds.class_count() != classes || static_cast<int>(p.thresholds.upper.size()) != classes) {
      throw DataError("threshold count disagrees with the model");
    }
    if (p.thresholds.value_function.class_count() != classes ||
        p.thresholds.value_function.grid_points() != p.solver.grid_points()) {
      throw DataError("value function shape disagrees with model and grid");
    }
    if (a.quantizer.class_count() != classes) throw DataError("quantizer class count disagrees with the model");
    const double pivot = p.costs.indifference();
    for (int z = 0; z < classes; ++z) {
      const double lo = p.thresholds.lower[z];
      const double hi = p.thresholds.upper[z];
      if (!(lo >= 0.0 && lo <= pivot + 1e-12 && hi >= pivot - 1e-12 && hi <= 1.0)) {
        throw DataError("thresholds for class " + std::to_string(z) + " violate 0 <= lower <= " +
                        "c_I/(c_I+c_II) <= upper <= 1");
      }
    }
    return a;
  });
}

json to_json(const TrainingReport& r) {
  json j;
  j["class_count"] = r.class_count;
  j["smoothing_alpha"] = r.smoothing;
  j["trace_counts"] = {{"news", r.trace_counts[0]}, {"misinformation", r.trace_counts[1]}};
  json counts;
  for (int label = 0; label < 2; ++label) {
    json rows = json::array();
    const auto& m = r.transition_counts[label];
    for (Eigen::Index a = 0; a < m.rows(); ++a) {
      json row = json::array();
      for (Eigen::Index b = 0; b < m.cols(); ++b) row.push_back(m(a, b));
      rows.push_back(std::move(row));
    }
    counts[to_string(hypothesis_from_int(label))] = std::move(rows);
  }
  j["transition_counts"] = std::move(counts);
  json undefined = json::array();
  for (const auto& [label, row] : r.undefined_rows) {
    undefined.push_back({{"label", to_int(label)}, {"source_class", row}});
  }
  j["undefined_rows"] = std::move(undefined);
  j["model"] = r.model ? model_to_json(*r.model) : json(nullptr);
  return j;
}

json to_json(const MetricsReport& m) {
  const auto& n = m.counts;
  return {{"accuracy", number_or_null(m.accuracy)},
          {"false_positive_rate", number_or_null(m.false_positive_rate)},
          {"false_negative_rate", number_or_null(m.false_negative_rate)},
          {"mean_detection_time_news", number_or_null(m.mean_detection_time_news)},
          {"mean_detection_time_misinformation", number_or_null(m.mean_detection_time_misinformation)},
          {"forced_decision_fraction", number_or_null(m.forced_decision_fraction)},
          {"mean_realized_cost", number_or_null(m.mean_realized_cost)},
          {"counts",
           {{"traces", n.traces},
            {"news", n.news},
            {"misinformation", n.misinformation},
            {"correct", n.correct},
            {"false_positives", n.false_positives},
            {"false_negatives", n.false_negatives},
            {"forced", n.forced},
            {"declared_news", n.declared_news},
            {"declared_misinformation", n.declared_misinformation}}}};
}

json to_json(const SyntheticConfig& c) {
  return {{"node_count", c.node_count},
          {"edges_per_node", c.edges_per_node},
          {"same_type_prob", c.same_type_prob},
          {"trace_count", c.trace_count},
          {"prior", c.prior},
          {"spread_probs", matrix_to_json(c.spread_probs)},
          {"max_events", c.max_events},
          {"max_source_retries", c.max_source_retries},
          {"seed", c.seed}};
}

json to_json(const OracleResult& r) {
  return {{"horizon", r.horizon},
          {"optimal_cost", r.optimal_cost},
          {"policy_cost", r.policy_cost},
          {"gap", r.gap},
          {"forced_probability", r.forced_probability},
          {"truncation_slack", r.truncation_slack}};
}

json read_json_file(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> columns{
      "accuracy",
      "false_positive_rate",
      "false_negative_rate",
      "mean_detection_time_news",
      "mean_detection_time_misinformation",
      "forced_decision_fraction",
      "mean_realized_cost",
      "traces",
      "news",
      "misinformation",
      "correct",
      "false_positives",
      "false_negatives",
      "forced",
  };
  return columns;
}

namespace {

void write_metrics_fields(std::ostream& out, const MetricsReport& m) {
  const auto& n = m.counts;
  for (double v : {m.accuracy, m.false_positive_rate, m.false_negative_rate, m.mean_detection_time_news,
                   m.mean_detection_time_misinformation, m.forced_decision_fraction, m.mean_realized_cost}) {
    out << ',' << (std::isfinite(v) ? format_double(v) : std::string("nan"));
  }
  for (long v : {n.traces, n.news, n.misinformation, n.correct, n.false_positives, n.false_negatives, n.forced}) {
    out << ',' << v;
  }
  out << '\n';
}

void write_header(std::ostream& out, const char* first) {
  out << first;
  for (const auto& c : metrics_columns()) out << ',' << c;
  out << '\n';
}

}  // namespace

void write_cost_sweep_csv(std::ostream& out, std::span<const CostSweepRow> rows) {
  write_header(out, "c");
  for (const auto& r : rows) {
    out << format_double(r.step_cost);
    write_metrics_fields(out, r.metrics);
  }
}

void write_noise_sweep_csv(std::ostream& out, std::span<const NoiseSweepRow> rows) {
  write_header(out, "misclass_prob");
  for (const auto& r : rows) {
    out << format_double(r.misclass_prob);
    write_metrics_fields(out, r.metrics);
  }
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace quickstop::io
