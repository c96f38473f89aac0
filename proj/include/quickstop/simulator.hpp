#pragma once

#include <cstdint>
#include <vector>

#include "quickstop/types.hpp"

namespace quickstop {

enum class NodeType { Messenger = 0, Gossiper = 1 };

/// Edge class of a spreading hop from `src` to `dst`:
/// 0 (m,m), 1 (g,m), 2 (m,g), 3 (g,g).
constexpr EdgeClass hop_class(NodeType src, NodeType dst) {
  return EdgeClass((src == NodeType::Gossiper ? 1 : 0) + (dst == NodeType::Gossiper ? 2 : 0));
}

struct SyntheticConfig {
  int node_count = 500;
  int edges_per_node = 3;
  double same_type_prob = 0.7;
  int trace_count = 500;
  double prior = 0.5;
  // Retweet probability per edge class; row 0 news, row 1 misinformation.
  MatrixXd spread_probs = default_spread_probs();
  int max_events = 500;
  int max_source_retries = 100;
  std::uint64_t seed = 1;

  static MatrixXd default_spread_probs() {
    MatrixXd p(2, 4);
    p << 0.9, 0.7, 0.3, 0.1,
         0.1, 0.2, 0.7, 0.9;
    return p;
  }

  void validate() const;
};

/// Preferential-attachment network of gossipers and messengers. Each
/// attachment is a mutual follow, so information can cross it both ways.
struct SyntheticNetwork {
  std::vector<NodeType> types;
  // (new node, existing node) attachment pairs, seed clique first.
  std::vector<std::pair<int, int>> attachments;
  std::vector<std::vector<int>> neighbors;
  int seed_nodes = 0;

  int node_count() const noexcept { return static_cast<int>(types.size()); }
  std::vector<int> degrees() const;
};

struct SpreadEvent {
  int src;
  int dst;
  double time;
  EdgeClass edge_class;
};

struct SpreadTrace {
  Hypothesis label;
  int source;
  std::vector<SpreadEvent> events;
};

SyntheticNetwork generate_network(const SyntheticConfig& config);

/// Continuous-time SI cascade from a uniformly random source. Every
/// (infected, susceptible neighbor) pair gets one attempt that succeeds
/// with the configured probability for its edge class, after an Exp(1)
/// delay. Events are emitted in infection-time order.
SpreadTrace spread(const SyntheticNetwork& network, Hypothesis label, const SyntheticConfig& config,
                   std::uint64_t seed);

/// Converts a cascade to a class-bearing trace with ground-truth classes.
Trace to_trace(const SpreadTrace& cascade, std::string id);

/// Attaches one-hot node-type features: src = type of the infector,
/// dst = type of the retweeter.
Trace to_feature_trace(const SpreadTrace& cascade, const SyntheticNetwork& network, std::string id);

/// Replaces each class with probability `misclass_prob` by one of the
/// other C-1 classes, uniformly. The per-event draws depend only on the
/// seed, so raising the probability only adds flips.
Trace inject_noise(const Trace& trace, double misclass_prob, int class_count, std::uint64_t seed);

/// Z_1 uniform, then Markov steps under the label's transition matrix.
Trace sample_markov_trace(const TransitionModel& model, Hypothesis label, int length,
                          std::uint64_t seed);

/// Labeled trace set: labels drawn with Pr(misinformation) = config.prior.
std::vector<SpreadTrace> simulate_cascades(const SyntheticNetwork& network,
                                           const SyntheticConfig& config, std::uint64_t seed);

}  // namespace quickstop
