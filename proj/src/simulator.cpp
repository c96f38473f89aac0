#include "quickstop/simulator.hpp"

#include <algorithm>
#include <queue>
#include <string>

#include "quickstop/error.hpp"
#include "quickstop/random.hpp"

namespace quickstop {

namespace {

NodeType random_type(RandomStream& rng) {
  return rng.bernoulli(0.5) ? NodeType::Gossiper : NodeType::Messenger;
}

NodeType other(NodeType t) {
  return t == NodeType::Gossiper ? NodeType::Messenger : NodeType::Gossiper;
}

// Degree-proportional pick among existing nodes of `type` not yet chosen;
// -1 when none is available.
int pick_by_degree(const std::vector<NodeType>& types, const std::vector<int>& degree, int existing,
                   NodeType type, const std::vector<int>& chosen, RandomStream& rng) {
  long total = 0;
  for (int v = 0; v < existing; ++v) {
    if (types[v] != type || std::find(chosen.begin(), chosen.end(), v) != chosen.end()) continue;
    total += std::max(degree[v], 1);
  }
  if (total == 0) return -1;
  long r = static_cast<long>(rng.below(static_cast<std::uint64_t>(total)));
  for (int v = 0; v < existing; ++v) {
    if (types[v] != type || std::find(chosen.begin(), chosen.end(), v) != chosen.end()) continue;
    r -= std::max(degree[v], 1);
    if (r < 0) return v;
  }
  return -1;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (edges_per_node < 1) throw InvalidArgument("edges_per_node must be positive");
  if (node_count <= edges_per_node) throw InvalidArgument("node_count must exceed edges_per_node");
  if (!(same_type_prob >= 0.0 && same_type_prob <= 1.0)) {
    throw InvalidArgument("same_type_prob must lie in [0,1]");
  }
  if (trace_count < 0) throw InvalidArgument("trace_count must be nonnegative");
  if (!(prior >= 0.0 && prior <= 1.0)) throw InvalidArgument("prior must lie in [0,1]");
  if (spread_probs.rows() != 2 || spread_probs.cols() != 4) {
    throw InvalidArgument("spread_probs must be 2 x 4");
  }
  if ((spread_probs.array() < 0.0).any() || (spread_probs.array() > 1.0).any()) {
    throw InvalidArgument("spread_probs entries must lie in [0,1]");
  }
  if (max_events < 1) throw InvalidArgument("max_events must be positive");
  if (max_source_retries < 1) throw InvalidArgument("max_source_retries must be positive");
}

std::vector<int> SyntheticNetwork::degrees() const {
  std::vector<int> d(neighbors.size());
  for (std::size_t v = 0; v < neighbors.size(); ++v) d[v] = static_cast<int>(neighbors[v].size());
  return d;
}

SyntheticNetwork generate_network(const SyntheticConfig& config) {
  config.validate();
  RandomStream rng = RandomStream::derive(config.seed, 0x6e6574);
  SyntheticNetwork net;
  const int n = config.node_count;
  const int m = config.edges_per_node;
  net.types.resize(n);
  net.neighbors.resize(n);
  net.seed_nodes = m;
  std::vector<int> degree(n, 0);

  auto link = [&](int a, int b) {
    net.attachments.emplace_back(a, b);
    net.neighbors[a].push_back(b);
    net.neighbors[b].push_back(a);
    ++degree[a];
    ++degree[b];
  };

  for (int v = 0; v < m; ++v) net.types[v] = random_type(rng);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < a; ++b) link(a, b);
  }

  std::vector<int> chosen;
  for (int v = m; v < n; ++v) {
    net.types[v] = random_type(rng);
    chosen.clear();
    for (int e = 0; e < m; ++e) {
      const NodeType want = rng.bernoulli(config.same_type_prob) ? net.types[v] : other(net.types[v]);
      int target = pick_by_degree(net.types, degree, v, want, chosen, rng);
      if (target < 0) target = pick_by_degree(net.types, degree, v, other(want), chosen, rng);
      if (target < 0) break;  // fewer than m existing nodes remain
      chosen.push_back(target);
    }
    for (int target : chosen) link(v, target);
  }
  return net;
}

SpreadTrace spread(const SyntheticNetwork& network, Hypothesis label, const SyntheticConfig& config,
                   std::uint64_t seed) {
  config.validate();
  const int n = network.node_count();
  if (n == 0) throw InvalidArgument("empty network");
  const int row = to_int(label);
  RandomStream rng(seed);

  struct Pending {
    double time;
    int src;
    int dst;
    bool operator>(const Pending& o) const {
      if (time != o.time) return time > o.time;
      if (dst != o.dst) return dst > o.dst;
      return src > o.src;
    }
  };

  for (int attempt = 0; attempt < config.max_source_retries; ++attempt) {
    SpreadTrace out{label, static_cast<int>(rng.below(static_cast<std::uint64_t>(n))), {}};
    std::vector<char> infected(n, 0);
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue;

    auto expose = [&](int u, double t) {
      for (int w : network.neighbors[u]) {
        if (infected[w]) continue;
        const EdgeClass cls = hop_class(network.types[u], network.types[w]);
        const double p = config.spread_probs(row, cls.value());
        if (rng.bernoulli(p)) queue.push({t + rng.exponential(), u, w});
      }
    };

    infected[out.source] = 1;
    expose(out.source, 0.0);
    while (!queue.empty() && static_cast<int>(out.events.size()) < config.max_events) {
      const Pending next = queue.top();
      queue.pop();
      if (infected[next.dst]) continue;
      infected[next.dst] = 1;
      out.events.push_back({next.src, next.dst, next.time,
                            hop_class(network.types[next.src], network.types[next.dst])});
      expose(next.dst, next.time);
    }
    if (out.events.size() >= 2) return out;
  }
  throw DataError("cascade shorter than two events after " +
                  std::to_string(config.max_source_retries) + " source draws");
}

Trace to_trace(const SpreadTrace& cascade, std::string id) {
  Trace t;
  t.id = std::move(id);
  t.label = cascade.label;
  ClassEvents cls;
  cls.reserve(cascade.events.size());
  for (const auto& e : cascade.events) cls.push_back(e.edge_class);
  t.true_classes = cls;
  t.events = std::move(cls);
  return t;
}

Trace to_feature_trace(const SpreadTrace& cascade, const SyntheticNetwork& network, std::string id) {
  Trace t;
  t.id = std::move(id);
  t.label = cascade.label;
  FeatureEvents fe;
  fe.reserve(cascade.events.size());
  auto one_hot = [](NodeType type) {
    VectorXd v = VectorXd::Zero(2);
    v(static_cast<int>(type)) = 1.0;
    return v;
  };
  for (const auto& e : cascade.events) {
    fe.push_back({one_hot(network.types[e.src]), one_hot(network.types[e.dst])});
    t.true_classes.push_back(e.edge_class);
  }
  t.events = std::move(fe);
  return t;
}

Trace inject_noise(const Trace& trace, double misclass_prob, int class_count, std::uint64_t seed) {
  if (!(misclass_prob >= 0.0 && misclass_prob <= 1.0)) {
    throw InvalidArgument("misclassification probability must lie in [0,1]");
  }
  if (class_count < 2) throw InvalidArgument("class count must be at least 2");
  if (!trace.has_classes()) throw InvalidArgument("noise injection needs a class-bearing trace");
  RandomStream rng(seed);
  Trace out = trace;
  ClassEvents& cls = std::get<ClassEvents>(out.events);
  for (EdgeClass& z : cls) {
    const double u = rng.uniform();
    const int shift = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(class_count - 1)));
    if (u < misclass_prob) z = EdgeClass((z.value() + shift) % class_count);
  }
  return out;
}

Trace sample_markov_trace(const TransitionModel& model, Hypothesis label, int length,
                          std::uint64_t seed) {
  if (length < 2) throw InvalidArgument("Markov trace length must be at least 2");
  RandomStream rng(seed);
  const int c = model.class_count();
  const MatrixXd& alpha = model.alpha(label);
  ClassEvents cls;
  cls.reserve(length);
  cls.emplace_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(c))));
  for (int k = 1; k < length; ++k) {
    const int prev = cls.back().value();
    const double u = rng.uniform();
    double acc = 0.0;
    int next = c - 1;
    for (int j = 0; j < c; ++j) {
      acc += alpha(prev, j);
      if (u < acc) {
        next = j;
        break;
      }
    }
    // fall through to the last class with positive mass on rounding
    if (alpha(prev, next) == 0.0) {
      for (int j = c - 1; j >= 0; --j) {
        if (alpha(prev, j) > 0.0) {
          next = j;
          break;
        }
      }
    }
    cls.emplace_back(next);
  }
  Trace t;
  t.id = "markov-" + std::to_string(seed);
  t.label = label;
  t.true_classes = cls;
  t.events = std::move(cls);
  return t;
}

std::vector<SpreadTrace> simulate_cascades(const SyntheticNetwork& network,
                                           const SyntheticConfig& config, std::uint64_t seed) {
  config.validate();
  RandomStream labels = RandomStream::derive(seed, 0x6c6162);
  std::vector<SpreadTrace> out;
  out.reserve(config.trace_count);
  for (int i = 0; i < config.trace_count; ++i) {
    const Hypothesis h = labels.bernoulli(config.prior) ? Hypothesis::Misinformation : Hypothesis::News;
    out.push_back(spread(network, h, config, RandomStream::derive(seed, 1000 + i).next()));
  }
  return out;
}

}  // namespace quickstop
