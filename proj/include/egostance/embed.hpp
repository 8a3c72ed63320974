#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "egostance/corpus.hpp"
#include "egostance/enm.hpp"
#include "egostance/rng.hpp"
#include "egostance/senm.hpp"

namespace egostance {

/// Walker's alias method: O(n) build, O(1) draws.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> weights);
  std::size_t sample(Rng& rng) const;
  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

using NodeIndex = std::uint32_t;

struct Arc {
  NodeIndex to;
  double weight;
};

/// Adjacency-list graph over string ids. Node indices follow sorted id order and each
/// neighbour list is sorted by index with duplicate arcs merged (weights summed).
class Graph {
 public:
  Graph() = default;
  /// Undirected graphs store both arc directions. Self-loops are dropped; weights must be > 0.
  static Graph from_edges(std::span<const WeightedEdge> edges, bool directed);

  bool directed() const { return directed_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t arc_count() const;
  const std::vector<UserId>& nodes() const { return nodes_; }
  std::span<const Arc> neighbors(NodeIndex n) const { return adjacency_[n]; }
  std::optional<NodeIndex> index_of(const UserId& id) const;
  bool has_arc(NodeIndex from, NodeIndex to) const;

 private:
  bool directed_ = false;
  std::vector<UserId> nodes_;
  std::unordered_map<UserId, NodeIndex> index_;
  std::vector<std::vector<Arc>> adjacency_;
};

using SignMap = std::map<std::pair<UserId, UserId>, Sign>;

struct FeatureGraphs {
  Graph positive;                // the only graph in unsigned mode
  std::optional<Graph> negative;  // signed-split mode only
  std::size_t unsigned_dropped = 0;  // edges without a sign in signed-split mode
};

enum class GraphMode { Unsigned, SignedSplit };

FeatureGraphs build_feature_graph(std::span<const WeightedEdge> edges, const SignMap* signs, GraphMode mode,
                                  bool directed = false);

struct WalkParams {
  double p = 1.0;  // return
  double q = 1.0;  // in-out
  std::size_t walk_length = 80;
  std::size_t walks_per_node = 10;
  bool weighted = true;
};

void validate(const WalkParams& params);

/// Second-order transition probabilities out of `current`, aligned with graph.neighbors(current).
/// `prev` absent means first step (weights only). Empty result: `current` is dangling.
std::vector<double> transition_distribution(const Graph& graph, std::optional<NodeIndex> prev, NodeIndex current,
                                            const WalkParams& params);

using Walk = std::vector<NodeIndex>;

/// `walks_per_node` rounds; each round visits every node once in a seeded shuffled order. Every
/// walk draws from its own generator derived from (seed, round, start node), so thread count
/// never changes the output.
std::vector<Walk> generate_walks(const Graph& graph, const WalkParams& params, std::uint64_t seed,
                                 unsigned threads = 1);

struct SkipGramParams {
  std::size_t dimension = 128;
  std::size_t window = 10;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  double learning_rate_floor = 0.0001;
  std::uint64_t seed = 1;
};

void validate(const SkipGramParams& params);

struct EmbeddingTable {
  std::size_t dimension = 0;
  std::map<UserId, std::vector<double>> vectors;

  const std::vector<double>* find(const UserId& id) const;
  /// The stored vector, or zeros of length `dimension`.
  std::vector<double> vector_or_zero(const UserId& id) const;
};

/// Skip-gram objective for one (center, context) pair with sampled negatives:
/// log s(u.v+) + sum log s(-u.v-).
double skipgram_pair_loss(std::span<const double> center, std::span<const double> context,
                          std::span<const std::span<const double>> negatives);

/// One SGD ascent step on skipgram_pair_loss. All gradients are taken at the incoming
/// parameter values, so the update equals learning_rate times the analytic gradient.
void skipgram_pair_update(std::span<double> center, std::span<double> context,
                          std::span<const std::span<double>> negatives, double learning_rate);

/// Negative sampling over the unigram^0.75 distribution of walk tokens; returns input vectors
/// for every node that occurs in a walk, keyed by `node_names[index]`.
EmbeddingTable train_skipgram(std::span<const Walk> walks, std::span<const UserId> node_names,
                              const SkipGramParams& params);

enum class Feature { EnmFull, EnmInner, EnmOuter, Senm, Likes, Followers, Friends };

std::string_view to_string(Feature f);
Feature parse_feature(std::string_view name);
const std::vector<Feature>& all_graph_features();

struct EmbedParams {
  WalkParams walk;
  SkipGramParams skipgram;
  bool directed = false;
  unsigned threads = 1;
};

struct FeatureSources {
  std::span<const EgoNetwork> networks;
  std::span<const SignedEgoNetwork> signed_networks;
  std::span<const AuxGraph> aux_graphs;
};

struct EmbeddedFeature {
  Feature feature = Feature::EnmFull;
  EmbeddingTable table;
  std::vector<UserId> zero_vector_users;  // requested users with no embedding
};

EmbeddingTable embed_graph(const Graph& graph, std::size_t dimension, std::uint64_t seed, const EmbedParams& params);

/// One embedding branch. The signed feature embeds its positive and negative graphs at half
/// dimension each and concatenates them, zero-filling whichever half a node lacks.
EmbeddedFeature embed_feature(Feature feature, const FeatureSources& sources, std::span<const UserId> users,
                              const EmbedParams& params);

// embeddings.tsv
std::string format_embeddings(const EmbeddingTable& table, std::string_view feature, std::uint64_t seed);
EmbeddingTable parse_embeddings(std::string_view content);

}  // namespace egostance
