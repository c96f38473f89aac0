#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "quickstop/evaluation.hpp"
#include "quickstop/policy.hpp"
#include "quickstop/simulator.hpp"
#include "quickstop/training.hpp"
#include "quickstop/types.hpp"

namespace quickstop::io {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

// ---- traces (JSON Lines) ------------------------------------------------

json to_json(const Trace& trace);
Trace trace_from_json(const json& j);

/// One trace per non-blank line. Errors name the offending line.
std::vector<Trace> read_traces(std::istream& in);
std::vector<Trace> read_traces_file(const std::string& path);
void write_traces(std::ostream& out, std::span<const Trace> traces);

// ---- artifacts ----------------------------------------------------------

struct Provenance {
  std::optional<std::uint64_t> seed;
  std::string data_hash;  // FNV-1a 64 of the input bytes, hex
  std::string command;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Learned model without thresholds (output of `train`).
struct ModelArtifact {
  TransitionModel model;
  Quantizer quantizer;
  EdgeScorer scorer = EdgeScorer::precomputed();
  Provenance provenance;

  friend bool operator==(const ModelArtifact&, const ModelArtifact&) = default;
};

/// Solved policy (output of `solve`), self-contained for detection.
struct PolicyArtifact {
  Policy policy;
  Quantizer quantizer;
  EdgeScorer scorer = EdgeScorer::precomputed();
  Provenance provenance;

  friend bool operator==(const PolicyArtifact&, const PolicyArtifact&) = default;
};

json to_json(const ModelArtifact& a);
ModelArtifact model_from_json(const json& j);
json to_json(const PolicyArtifact& a);
PolicyArtifact policy_from_json(const json& j);

json to_json(const TrainingReport& r);
json to_json(const MetricsReport& m);
json to_json(const SyntheticConfig& c);
json to_json(const OracleResult& r);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

// ---- sweeps (CSV) -------------------------------------------------------

/// Metric columns shared by every sweep table, in order.
const std::vector<std::string>& metrics_columns();

void write_cost_sweep_csv(std::ostream& out, std::span<const CostSweepRow> rows);
void write_noise_sweep_csv(std::ostream& out, std::span<const NoiseSweepRow> rows);

// ---- helpers ------------------------------------------------------------

std::string fnv1a_hex(std::string_view bytes);
std::string read_file(const std::string& path);

/// Shortest decimal that round-trips the double.
std::string format_double(double v);

}  // namespace quickstop::io
