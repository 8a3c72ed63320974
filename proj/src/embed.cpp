#include "egostance/embed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/Core>

#include "egostance/error.hpp"
#include "egostance/parallel.hpp"

namespace egostance {

// ---------------------------------------------------------------------------
// AliasTable
// ---------------------------------------------------------------------------

AliasTable::AliasTable(std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (n == 0) throw Error(ErrorKind::Validation, "alias table over no outcomes");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw Error(ErrorKind::Validation, "alias table weights must sum to > 0");
  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (auto i : large) prob_[i] = 1.0;
  for (auto i : small) prob_[i] = 1.0;  // numerical leftovers
}

std::size_t AliasTable::sample(Rng& rng) const {
  const std::size_t i = rng.below(prob_.size());
  return rng.uniform() < prob_[i] ? i : alias_[i];
}

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

Graph Graph::from_edges(std::span<const WeightedEdge> edges, bool directed) {
  Graph g;
  g.directed_ = directed;
  std::set<UserId> ids;
  for (const auto& e : edges) {
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw Error(ErrorKind::Validation, "edge " + e.from + " -> " + e.to + " has non-positive weight");
    }
    ids.insert(e.from);
    ids.insert(e.to);
  }
  g.nodes_.assign(ids.begin(), ids.end());
  for (std::size_t i = 0; i < g.nodes_.size(); ++i) g.index_.emplace(g.nodes_[i], static_cast<NodeIndex>(i));

  std::vector<std::map<NodeIndex, double>> merged(g.nodes_.size());
  for (const auto& e : edges) {
    if (e.from == e.to) continue;
    const NodeIndex a = g.index_.at(e.from);
    const NodeIndex b = g.index_.at(e.to);
    merged[a][b] += e.weight;
    if (!directed) merged[b][a] += e.weight;
  }
  g.adjacency_.resize(g.nodes_.size());
  for (std::size_t i = 0; i < merged.size(); ++i) {
    g.adjacency_[i].reserve(merged[i].size());
    for (const auto& [to, w] : merged[i]) g.adjacency_[i].push_back({to, w});
  }
  return g;
}

std::size_t Graph::arc_count() const {
  std::size_t n = 0;
  for (const auto& a : adjacency_) n += a.size();
  return directed_ ? n : n / 2;
}

std::optional<NodeIndex> Graph::index_of(const UserId& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Graph::has_arc(NodeIndex from, NodeIndex to) const {
  const auto& adj = adjacency_[from];
  const auto it = std::lower_bound(adj.begin(), adj.end(), to, [](const Arc& a, NodeIndex t) { return a.to < t; });
  return it != adj.end() && it->to == to;
}

FeatureGraphs build_feature_graph(std::span<const WeightedEdge> edges, const SignMap* signs, GraphMode mode,
                                  bool directed) {
  FeatureGraphs out;
  if (mode == GraphMode::Unsigned) {
    out.positive = Graph::from_edges(edges, directed);
    return out;
  }
  if (!signs) throw Error(ErrorKind::Usage, "signed-split graph requested without a sign map");
  std::vector<WeightedEdge> pos, neg;
  for (const auto& e : edges) {
    const auto it = signs->find({e.from, e.to});
    if (it == signs->end()) {
      ++out.unsigned_dropped;
      continue;
    }
    (it->second == Sign::Positive ? pos : neg).push_back(e);
  }
  out.positive = Graph::from_edges(pos, directed);
  out.negative = Graph::from_edges(neg, directed);
  return out;
}

// ---------------------------------------------------------------------------
// Walks
// ---------------------------------------------------------------------------

void validate(const WalkParams& params) {
  if (!(params.p > 0.0) || !(params.q > 0.0)) throw Error(ErrorKind::Validation, "walk p and q must be > 0");
  if (params.walk_length < 2) throw Error(ErrorKind::Validation, "walk length must be >= 2");
  if (params.walks_per_node < 1) throw Error(ErrorKind::Validation, "walks per node must be >= 1");
}

namespace {

double bias(const Graph& g, NodeIndex prev, NodeIndex candidate, const WalkParams& params) {
  if (candidate == prev) return 1.0 / params.p;
  if (g.has_arc(prev, candidate)) return 1.0;
  return 1.0 / params.q;
}

}  // namespace

std::vector<double> transition_distribution(const Graph& graph, std::optional<NodeIndex> prev, NodeIndex current,
                                            const WalkParams& params) {
  const auto nbrs = graph.neighbors(current);
  std::vector<double> probs;
  if (nbrs.empty()) return probs;
  probs.reserve(nbrs.size());
  double total = 0.0;
  for (const Arc& a : nbrs) {
    double w = params.weighted ? a.weight : 1.0;
    if (prev) w *= bias(graph, *prev, a.to, params);
    probs.push_back(w);
    total += w;
  }
  for (double& p : probs) p /= total;
  return probs;
}

std::vector<Walk> generate_walks(const Graph& graph, const WalkParams& params, std::uint64_t seed, unsigned threads) {
  validate(params);
  const std::size_t n = graph.node_count();
  std::vector<Walk> walks;
  if (n == 0) return walks;

  std::vector<AliasTable> first_order(n);
  for (std::size_t v = 0; v < n; ++v) {
    const auto nbrs = graph.neighbors(static_cast<NodeIndex>(v));
    if (nbrs.empty()) continue;
    std::vector<double> w;
    w.reserve(nbrs.size());
    for (const Arc& a : nbrs) w.push_back(params.weighted ? a.weight : 1.0);
    first_order[v] = AliasTable(w);
  }

  // Second-order bias by rejection against the first-order proposal: exact, O(1) expected
  // draws per step, and no per-edge tables.
  const bool biased = params.p != 1.0 || params.q != 1.0;
  const double max_bias = std::max({1.0 / params.p, 1.0, 1.0 / params.q});

  walks.resize(n * params.walks_per_node);
  for (std::size_t round = 0; round < params.walks_per_node; ++round) {
    std::vector<NodeIndex> order(n);
    std::iota(order.begin(), order.end(), NodeIndex{0});
    Rng order_rng(derive_seed(seed, round, 0xA11CE));
    order_rng.shuffle(order);

    parallel_for(n, threads, [&](std::size_t slot) {
      const NodeIndex start = order[slot];
      Rng rng(derive_seed(seed, round, start));
      Walk& walk = walks[round * n + slot];
      walk.reserve(params.walk_length);
      walk.push_back(start);
      while (walk.size() < params.walk_length) {
        const NodeIndex cur = walk.back();
        const auto nbrs = graph.neighbors(cur);
        if (nbrs.empty()) break;
        NodeIndex next;
        if (walk.size() == 1 || !biased) {
          next = nbrs[first_order[cur].sample(rng)].to;
        } else {
          const NodeIndex prev = walk[walk.size() - 2];
          for (;;) {
            const NodeIndex cand = nbrs[first_order[cur].sample(rng)].to;
            if (rng.uniform() * max_bias < bias(graph, prev, cand, params)) {
              next = cand;
              break;
            }
          }
        }
        walk.push_back(next);
      }
    });
  }
  return walks;
}

// ---------------------------------------------------------------------------
// Skip-gram
// ---------------------------------------------------------------------------

void validate(const SkipGramParams& params) {
  if (params.dimension < 2) throw Error(ErrorKind::Validation, "embedding dimension must be >= 2");
  if (params.negatives < 1) throw Error(ErrorKind::Validation, "negative samples must be >= 1");
  if (params.window < 1) throw Error(ErrorKind::Validation, "skip-gram window must be >= 1");
  if (params.epochs < 1) throw Error(ErrorKind::Validation, "skip-gram epochs must be >= 1");
  if (!(params.learning_rate > 0.0) || params.learning_rate_floor < 0.0) {
    throw Error(ErrorKind::Validation, "invalid skip-gram learning rate");
  }
}

const std::vector<double>* EmbeddingTable::find(const UserId& id) const {
  const auto it = vectors.find(id);
  return it == vectors.end() ? nullptr : &it->second;
}

std::vector<double> EmbeddingTable::vector_or_zero(const UserId& id) const {
  if (const auto* v = find(id)) return *v;
  return std::vector<double>(dimension, 0.0);
}

namespace {

using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using Vec = Eigen::Map<Eigen::VectorXd>;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

ConstVec cmap(std::span<const double> s) { return ConstVec(s.data(), static_cast<Eigen::Index>(s.size())); }
Vec vmap(std::span<double> s) { return Vec(s.data(), static_cast<Eigen::Index>(s.size())); }

}  // namespace

double skipgram_pair_loss(std::span<const double> center, std::span<const double> context,
                          std::span<const std::span<const double>> negatives) {
  const auto u = cmap(center);
  double loss = log_sigmoid(u.dot(cmap(context)));
  for (const auto& neg : negatives) loss += log_sigmoid(-u.dot(cmap(neg)));
  return loss;
}

void skipgram_pair_update(std::span<double> center, std::span<double> context,
                          std::span<const std::span<double>> negatives, double learning_rate) {
  auto u = vmap(center);
  Eigen::VectorXd grad_u = Eigen::VectorXd::Zero(u.size());
  auto step = [&](std::span<double> target, double label) {
    auto v = vmap(target);
    const double g = label - sigmoid(u.dot(v));
    grad_u.noalias() += g * v;
    v.noalias() += (learning_rate * g) * u;
  };
  step(context, 1.0);
  for (const auto& neg : negatives) step(neg, 0.0);
  u.noalias() += learning_rate * grad_u;
}

EmbeddingTable train_skipgram(std::span<const Walk> walks, std::span<const UserId> node_names,
                              const SkipGramParams& params) {
  validate(params);
  if (walks.empty()) throw Error(ErrorKind::Validation, "train_skipgram: no walks");

  std::vector<std::size_t> counts(node_names.size(), 0);
  std::size_t total_tokens = 0;
  for (const auto& w : walks) {
    for (NodeIndex v : w) {
      if (v >= node_names.size()) throw Error(ErrorKind::Validation, "train_skipgram: walk node out of range");
      ++counts[v];
    }
    total_tokens += w.size();
  }
  std::vector<NodeIndex> vocab;
  for (std::size_t v = 0; v < counts.size(); ++v) {
    if (counts[v] > 0) vocab.push_back(static_cast<NodeIndex>(v));
  }
  if (vocab.size() < 2) throw Error(ErrorKind::Validation, "degenerate vocabulary");

  std::vector<double> noise_weights;
  noise_weights.reserve(vocab.size());
  for (NodeIndex v : vocab) noise_weights.push_back(std::pow(static_cast<double>(counts[v]), 0.75));
  const AliasTable noise(noise_weights);

  const std::size_t d = params.dimension;
  Rng rng(params.seed);
  std::vector<double> input(node_names.size() * d, 0.0);
  std::vector<double> output(node_names.size() * d, 0.0);
  for (NodeIndex v : vocab) {
    for (std::size_t k = 0; k < d; ++k) input[v * d + k] = (rng.uniform() - 0.5) / static_cast<double>(d);
  }
  auto in_vec = [&](NodeIndex v) { return std::span<double>(input.data() + v * d, d); };
  auto out_vec = [&](NodeIndex v) { return std::span<double>(output.data() + v * d, d); };

  const double total_steps = static_cast<double>(params.epochs * total_tokens);
  std::size_t processed = 0;
  std::vector<std::span<double>> negs;
  negs.reserve(params.negatives);
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    for (const auto& walk : walks) {
      for (std::size_t i = 0; i < walk.size(); ++i, ++processed) {
        const double lr = std::max(params.learning_rate_floor,
                                   params.learning_rate * (1.0 - static_cast<double>(processed) / total_steps));
        // word2vec-style dynamic window: effective radius uniform in [1, window].
        const std::size_t radius = 1 + rng.below(params.window);
        const std::size_t lo = i >= radius ? i - radius : 0;
        const std::size_t hi = std::min(walk.size() - 1, i + radius);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i || walk[j] == walk[i]) continue;
          negs.clear();
          for (std::size_t k = 0; k < params.negatives; ++k) {
            const NodeIndex neg = vocab[noise.sample(rng)];
            if (neg == walk[j] || neg == walk[i]) continue;
            negs.push_back(out_vec(neg));
          }
          skipgram_pair_update(in_vec(walk[i]), out_vec(walk[j]), negs, lr);
        }
      }
    }
  }

  EmbeddingTable table;
  table.dimension = d;
  for (NodeIndex v : vocab) {
    const auto s = in_vec(v);
    table.vectors.emplace(node_names[v], std::vector<double>(s.begin(), s.end()));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

std::string_view to_string(Feature f) {
  switch (f) {
    case Feature::EnmFull: return "enm-full";
    case Feature::EnmInner: return "enm-inner";
    case Feature::EnmOuter: return "enm-outer";
    case Feature::Senm: return "senm";
    case Feature::Likes: return "likes";
    case Feature::Followers: return "followers";
    case Feature::Friends: return "friends";
  }
  return "enm-full";
}

Feature parse_feature(std::string_view name) {
  for (Feature f : all_graph_features()) {
    if (to_string(f) == name) return f;
  }
  throw Error(ErrorKind::Usage, "unknown feature '" + std::string(name) + "'");
}

const std::vector<Feature>& all_graph_features() {
  static const std::vector<Feature> all{Feature::EnmFull, Feature::EnmInner,  Feature::EnmOuter, Feature::Senm,
                                        Feature::Likes,   Feature::Followers, Feature::Friends};
  return all;
}

EmbeddingTable embed_graph(const Graph& graph, std::size_t dimension, std::uint64_t seed, const EmbedParams& params) {
  EmbeddingTable empty;
  empty.dimension = dimension;
  if (graph.node_count() < 2) return empty;
  const auto walks = generate_walks(graph, params.walk, seed, params.threads);
  SkipGramParams sg = params.skipgram;
  sg.dimension = dimension;
  sg.seed = derive_seed(seed, 0x5C1B, params.skipgram.seed);
  return train_skipgram(walks, graph.nodes(), sg);
}

namespace {

std::uint64_t feature_seed(Feature f, const EmbedParams& params, std::uint64_t part) {
  return derive_seed(params.skipgram.seed, static_cast<std::uint64_t>(f) + 1, part);
}

}  // namespace

EmbeddedFeature embed_feature(Feature feature, const FeatureSources& sources, std::span<const UserId> users,
                              const EmbedParams& params) {
  validate(params.skipgram);
  validate(params.walk);
  EmbeddedFeature out;
  out.feature = feature;
  const std::size_t d = params.skipgram.dimension;

  switch (feature) {
    case Feature::EnmFull:
    case Feature::EnmInner:
    case Feature::EnmOuter: {
      const CircleSelector sel = feature == Feature::EnmFull    ? CircleSelector::Full
                                 : feature == Feature::EnmInner ? CircleSelector::Inner
                                                                : CircleSelector::Outer;
      const auto edges = select_edges(sources.networks, sel);
      const auto g = build_feature_graph(edges, nullptr, GraphMode::Unsigned, params.directed);
      out.table = embed_graph(g.positive, d, feature_seed(feature, params, 0), params);
      break;
    }
    case Feature::Senm: {
      if (d < 2 || d % 2 != 0) throw Error(ErrorKind::Validation, "signed embedding needs an even dimension");
      std::vector<EgoNetwork> bases;
      SignMap signs;
      for (const auto& s : sources.signed_networks) {
        bases.push_back(s.base);
        for (const auto& [alter, sign] : s.signs) signs.emplace(std::pair{s.base.ego(), alter}, sign);
      }
      const auto edges = select_edges(bases, CircleSelector::Full);
      const auto g = build_feature_graph(edges, &signs, GraphMode::SignedSplit, params.directed);
      const std::size_t half = d / 2;
      const auto pos = embed_graph(g.positive, half, feature_seed(feature, params, 1), params);
      const auto neg = embed_graph(*g.negative, half, feature_seed(feature, params, 2), params);
      out.table.dimension = d;
      std::set<UserId> ids;
      for (const auto& [id, _] : pos.vectors) ids.insert(id);
      for (const auto& [id, _] : neg.vectors) ids.insert(id);
      for (const auto& id : ids) {
        std::vector<double> v(d, 0.0);
        if (const auto* p = pos.find(id)) std::copy(p->begin(), p->end(), v.begin());
        if (const auto* n = neg.find(id)) std::copy(n->begin(), n->end(), v.begin() + static_cast<std::ptrdiff_t>(half));
        out.table.vectors.emplace(id, std::move(v));
      }
      break;
    }
    case Feature::Likes:
    case Feature::Followers:
    case Feature::Friends: {
      const AuxKind kind = feature == Feature::Likes       ? AuxKind::Likes
                           : feature == Feature::Followers ? AuxKind::Followers
                                                           : AuxKind::Friends;
      std::vector<WeightedEdge> edges;
      for (const auto& g : sources.aux_graphs) {
        if (g.kind != kind) continue;
        for (const auto& [a, b] : g.edges) edges.push_back({a, b, 1.0});
      }
      const auto g = build_feature_graph(edges, nullptr, GraphMode::Unsigned, params.directed);
      out.table = embed_graph(g.positive, d, feature_seed(feature, params, 0), params);
      break;
    }
  }
  out.table.dimension = d;

  std::set<UserId> missing;
  for (const auto& u : users) {
    if (!out.table.find(u)) missing.insert(u);
  }
  out.zero_vector_users.assign(missing.begin(), missing.end());
  return out;
}

// ---------------------------------------------------------------------------
// embeddings.tsv
// ---------------------------------------------------------------------------

std::string format_embeddings(const EmbeddingTable& table, std::string_view feature, std::uint64_t seed) {
  std::string out = "#d=" + std::to_string(table.dimension) + " feature=" + std::string(feature) +
                    " seed=" + std::to_string(seed) + "\n";
  char buf[32];
  for (const auto& [id, v] : table.vectors) {
    out += id;
    for (double x : v) {
      std::snprintf(buf, sizeof buf, "\t%.17g", x);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

EmbeddingTable parse_embeddings(std::string_view content) {
  EmbeddingTable table;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto pos = line.find("d=");
      if (pos == std::string::npos) throw Error(ErrorKind::Parse, "embeddings header lacks d=<dim>");
      table.dimension = std::stoul(line.substr(pos + 2));
      have_header = true;
      continue;
    }
    if (!have_header) throw Error(ErrorKind::Parse, "embeddings file lacks '#d=' header");
    std::istringstream fields(line);
    std::string id;
    std::getline(fields, id, '\t');
    std::vector<double> v;
    std::string tok;
    while (std::getline(fields, tok, '\t')) {
      try {
        v.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw Error(ErrorKind::Parse, "embeddings line " + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
    }
    if (v.size() != table.dimension) {
      throw Error(ErrorKind::Parse, "embeddings line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(table.dimension) + " values");
    }
    table.vectors.emplace(std::move(id), std::move(v));
  }
  return table;
}

}  // namespace egostance
