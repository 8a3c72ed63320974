#include <doctest.h>

#include <cmath>
#include <map>

#include "egostance/embed.hpp"
#include "egostance/error.hpp"
#include "walk_oracle.hpp"

using namespace egostance;

namespace {

std::vector<WeightedEdge> undirected(std::initializer_list<std::pair<const char*, const char*>> pairs) {
  std::vector<WeightedEdge> out;
  for (auto [a, b] : pairs) out.push_back({a, b, 1.0});
  return out;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

Graph random_graph(Rng& rng, std::size_t n, double density) {
  std::vector<WeightedEdge> edges;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (rng.bernoulli(density)) edges.push_back({"n" + std::to_string(a), "n" + std::to_string(b), rng.uniform(0.1, 5.0)});
    }
  }
  return Graph::from_edges(edges, false);
}

}  // namespace

TEST_SUITE("embed") {

TEST_CASE("unsigned graph keeps one weighted arc per edge") {
  const std::vector<WeightedEdge> edges{{"a", "b", 2.0}, {"b", "c", 1.0}, {"c", "a", 0.5}};
  const auto g = build_feature_graph(edges, nullptr, GraphMode::Unsigned);
  CHECK(g.positive.arc_count() == 3);
  CHECK_FALSE(g.negative.has_value());
  const auto a = *g.positive.index_of("a");
  CHECK(g.positive.neighbors(a).size() == 2);
  CHECK(g.positive.neighbors(a)[0].weight == 2.0);
}

TEST_CASE("signed split partitions the arcs") {
  const std::vector<WeightedEdge> edges{{"a", "b", 1.0}, {"a", "c", 1.0}, {"b", "c", 1.0}};
  SignMap signs{{{"a", "b"}, Sign::Positive}, {{"a", "c"}, Sign::Positive}, {{"b", "c"}, Sign::Negative}};
  const auto g = build_feature_graph(edges, &signs, GraphMode::SignedSplit);
  REQUIRE(g.negative.has_value());
  CHECK(g.positive.arc_count() == 2);
  CHECK(g.negative->arc_count() == 1);
  CHECK(g.positive.arc_count() + g.negative->arc_count() == 3);
  CHECK_THROWS_AS(build_feature_graph(edges, nullptr, GraphMode::SignedSplit), Error);
}

TEST_CASE("triangle transitions are uniform") {
  const auto g = Graph::from_edges(undirected({{"a", "b"}, {"b", "c"}, {"c", "a"}}), false);
  const WalkParams params;
  for (NodeIndex cur = 0; cur < 3; ++cur) {
    const auto first = transition_distribution(g, std::nullopt, cur, params);
    CHECK(first == std::vector<double>{0.5, 0.5});
    for (const auto& arc : g.neighbors(cur)) {
      const auto p = transition_distribution(g, arc.to, cur, params);
      CHECK(p[0] == doctest::Approx(0.5));
      CHECK(p[1] == doctest::Approx(0.5));
    }
  }
}

TEST_CASE("path A-B-C with q = 0.5") {
  const auto g = Graph::from_edges(undirected({{"A", "B"}, {"B", "C"}}), false);
  WalkParams params;
  params.q = 0.5;
  const NodeIndex a = *g.index_of("A"), b = *g.index_of("B"), c = *g.index_of("C");
  const auto p = transition_distribution(g, a, b, params);
  const auto nb = g.neighbors(b);
  REQUIRE(nb.size() == 2);
  for (std::size_t i = 0; i < nb.size(); ++i) {
    if (nb[i].to == a) CHECK(p[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    if (nb[i].to == c) CHECK(p[i] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("transition probabilities are distributions over neighbours") {
  Rng rng(40);
  for (int t = 0; t < 200; ++t) {
    const auto g = random_graph(rng, 3 + rng.below(12), rng.uniform(0.2, 0.9));
    WalkParams params;
    params.p = rng.uniform(0.1, 4.0);
    params.q = rng.uniform(0.1, 4.0);
    params.weighted = rng.bernoulli(0.5);
    for (NodeIndex cur = 0; cur < g.node_count(); ++cur) {
      const auto nbrs = g.neighbors(cur);
      std::vector<std::optional<NodeIndex>> prevs{std::nullopt};
      for (const auto& a : nbrs) prevs.push_back(a.to);
      for (const auto& prev : prevs) {
        const auto p = transition_distribution(g, prev, cur, params);
        REQUIRE(p.size() == nbrs.size());
        double sum = 0.0;
        for (double x : p) {
          CHECK(x > 0.0);
          sum += x;
        }
        if (!p.empty()) CHECK(std::abs(sum - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("isolated node yields single-node walks") {
  const std::vector<WeightedEdge> edges{{"x", "x", 1.0}, {"a", "b", 1.0}};
  const auto g = Graph::from_edges(edges, false);
  const NodeIndex x = *g.index_of("x");
  CHECK(transition_distribution(g, std::nullopt, x, {}).empty());
  WalkParams params;
  params.walks_per_node = 7;
  std::size_t from_x = 0;
  for (const auto& w : generate_walks(g, params, 5)) {
    CHECK(w.size() <= params.walk_length);
    if (w[0] == x) {
      ++from_x;
      CHECK(w.size() == 1);
    }
  }
  CHECK(from_x == 7);
}

TEST_CASE("triangle second steps are uniform within two percent") {
  const auto g = Graph::from_edges(undirected({{"a", "b"}, {"b", "c"}, {"c", "a"}}), false);
  WalkParams params;
  params.walk_length = 3;
  params.walks_per_node = 10000;
  const auto walks = generate_walks(g, params, 99);
  // Keyed by (start, first step): the walk either returns or moves on to the third node.
  std::map<std::pair<NodeIndex, NodeIndex>, std::map<NodeIndex, std::size_t>> second;
  for (const auto& w : walks) {
    REQUIRE(w.size() == 3);
    ++second[{w[0], w[1]}][w[2]];
  }
  CHECK(second.size() == 6);
  for (const auto& [state, counts] : second) {
    CHECK(counts.size() == 2);
    std::size_t total = 0;
    for (const auto& [_, c] : counts) total += c;
    for (const auto& [_, c] : counts) CHECK(std::abs(static_cast<double>(c) / total - 0.5) <= 0.02);
  }
}

TEST_CASE("walk steps pass a chi-square test on small graphs") {
  Rng rng(41);
  for (int t = 0; t < 6; ++t) {
    const auto g = random_graph(rng, 4 + rng.below(2), 0.7);
    WalkParams params;
    params.p = 0.5;
    params.q = 2.0;
    const auto r = walk_oracle::step_test(g, params, 1000 + t, 10000);
    CHECK(r.samples >= 10000);
    CHECK(r.p_value > 0.01);
  }
}

TEST_CASE("walks are deterministic and thread-count invariant") {
  Rng rng(42);
  const auto g = random_graph(rng, 30, 0.2);
  WalkParams params;
  params.p = 0.7;
  params.q = 1.5;
  const auto a = generate_walks(g, params, 3, 1);
  CHECK(a == generate_walks(g, params, 3, 1));
  CHECK(a == generate_walks(g, params, 3, 4));
  CHECK(a.size() == g.node_count() * params.walks_per_node);
  CHECK(a != generate_walks(g, params, 4, 1));
}

TEST_CASE("pair update equals the finite-difference gradient") {
  Rng rng(43);
  const std::size_t d = 16, k = 5;
  for (int t = 0; t < 20; ++t) {
    std::vector<std::vector<double>> vecs(k + 2, std::vector<double>(d));
    for (auto& v : vecs) {
      for (auto& x : v) x = 0.5 * rng.normal();
    }
    auto loss_of = [&](const std::vector<std::vector<double>>& vs) {
      std::vector<std::span<const double>> negs;
      for (std::size_t i = 2; i < vs.size(); ++i) negs.emplace_back(vs[i]);
      return skipgram_pair_loss(vs[0], vs[1], negs);
    };
    const double lr = 1e-3;
    auto updated = vecs;
    {
      std::vector<std::span<double>> negs;
      for (std::size_t i = 2; i < updated.size(); ++i) negs.emplace_back(updated[i]);
      skipgram_pair_update(updated[0], updated[1], negs, lr);
    }
    double worst = 0.0;
    const double h = 1e-4;
    for (std::size_t v = 0; v < vecs.size(); ++v) {
      for (std::size_t i = 0; i < d; ++i) {
        auto plus = vecs, minus = vecs;
        plus[v][i] += h;
        minus[v][i] -= h;
        const double numeric = (loss_of(plus) - loss_of(minus)) / (2 * h);
        const double analytic = (updated[v][i] - vecs[v][i]) / lr;
        worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
      }
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("two disjoint cliques separate in embedding space") {
  std::vector<WeightedEdge> edges;
  for (int c = 0; c < 2; ++c) {
    for (int a = 0; a < 10; ++a) {
      for (int b = a + 1; b < 10; ++b) {
        edges.push_back({"c" + std::to_string(c) + "_" + std::to_string(a), "c" + std::to_string(c) + "_" + std::to_string(b), 1.0});
      }
    }
  }
  const auto g = Graph::from_edges(edges, false);
  const auto table = embed_graph(g, 128, 7, {});
  REQUIRE(table.vectors.size() == 20);
  double intra = 0, inter = 0;
  std::size_t n_intra = 0, n_inter = 0;
  for (const auto& [a, va] : table.vectors) {
    for (const auto& x : va) CHECK(std::isfinite(x));
    for (const auto& [b, vb] : table.vectors) {
      if (a >= b) continue;
      const double c = cosine(va, vb);
      if (a.substr(0, 2) == b.substr(0, 2)) {
        intra += c;
        ++n_intra;
      } else {
        inter += c;
        ++n_inter;
      }
    }
  }
  CHECK(intra / n_intra - inter / n_inter > 0.2);
}

TEST_CASE("degenerate vocabulary is rejected") {
  const std::vector<Walk> walks{{0, 0, 0}};
  const std::vector<UserId> names{"solo"};
  CHECK_THROWS_WITH_AS(train_skipgram(walks, names, {}), doctest::Contains("degenerate vocabulary"), Error);
}

TEST_CASE("embedding is bit-identical for identical seeds") {
  Rng rng(44);
  const auto g = random_graph(rng, 25, 0.3);
  EmbedParams params;
  params.skipgram.dimension = 16;
  params.walk.walks_per_node = 4;
  params.walk.walk_length = 20;
  const auto a = embed_graph(g, 16, 9, params);
  CHECK(a.vectors == embed_graph(g, 16, 9, params).vectors);
  params.threads = 3;
  CHECK(a.vectors == embed_graph(g, 16, 9, params).vectors);
}

TEST_CASE("signed feature concatenates halves and zero-fills") {
  auto rel = [](const char* ego, const char* alter) {
    Relationship r;
    r.ego = ego;
    r.alter = alter;
    r.interaction_count = 2;
    r.frequency = 1.0;
    return r;
  };
  std::vector<SignedEgoNetwork> nets;
  nets.push_back({EgoNetwork("a", {rel("a", "b"), rel("a", "c"), rel("a", "p")}, {{"b", "c", "p"}}),
                  {{"b", Sign::Negative}, {"c", Sign::Negative}, {"p", Sign::Positive}},
                  {}});
  nets.push_back({EgoNetwork("b", {rel("b", "c"), rel("b", "q")}, {{"c", "q"}}),
                  {{"c", Sign::Negative}, {"q", Sign::Positive}},
                  {}});
  EmbedParams params;
  params.skipgram.dimension = 8;
  params.walk.walks_per_node = 3;
  params.walk.walk_length = 10;
  FeatureSources sources;
  sources.signed_networks = nets;
  const std::vector<UserId> users{"a", "p", "q", "ghost"};
  const auto f = embed_feature(Feature::Senm, sources, users, params);
  CHECK(f.table.dimension == 8);
  // p and q only appear on positive ties.
  for (const char* only_pos : {"p", "q"}) {
    const auto* v = f.table.find(only_pos);
    REQUIRE(v != nullptr);
    CHECK(v->size() == 8);
    for (std::size_t i = 4; i < 8; ++i) CHECK((*v)[i] == 0.0);
    CHECK(std::any_of(v->begin(), v->begin() + 4, [](double x) { return x != 0.0; }));
  }
  CHECK(f.zero_vector_users == std::vector<UserId>{"ghost"});
  CHECK(f.table.vector_or_zero("ghost") == std::vector<double>(8, 0.0));
}

TEST_CASE("circle features keep the full dimension") {
  auto rel = [](const char* alter, double f) {
    Relationship r;
    r.ego = "e";
    r.alter = alter;
    r.interaction_count = 1;
    r.frequency = f;
    return r;
  };
  std::vector<EgoNetwork> nets{EgoNetwork("e", {rel("a", 9), rel("b", 8), rel("c", 3), rel("d", 1), rel("f", 1)},
                                          {{"a", "b"}, {"c"}, {"d", "f"}})};
  EmbedParams params;
  params.skipgram.dimension = 12;
  params.walk.walks_per_node = 2;
  params.walk.walk_length = 8;
  FeatureSources sources;
  sources.networks = nets;
  const std::vector<UserId> users{"e", "a", "d"};
  const auto inner = embed_feature(Feature::EnmInner, sources, users, params);
  CHECK(inner.table.dimension == 12);
  for (const auto& [_, v] : inner.table.vectors) CHECK(v.size() == 12);
  CHECK(inner.zero_vector_users == std::vector<UserId>{"d"});
  CHECK_THROWS_AS(parse_feature("enm-middle"), Error);
}

TEST_CASE("embeddings tsv round trip") {
  EmbeddingTable t;
  t.dimension = 3;
  t.vectors["u1"] = {0.1, -2.5e-7, 3.0};
  t.vectors["u2"] = {1.0 / 3.0, 0.0, -1.0};
  const std::string text = format_embeddings(t, "enm-full", 42);
  CHECK(text.starts_with("#d=3 feature=enm-full seed=42\n"));
  const auto back = parse_embeddings(text);
  CHECK(back.dimension == 3);
  CHECK(back.vectors == t.vectors);
  CHECK_THROWS_AS(parse_embeddings("#d=2 feature=x seed=1\nu1\t1.0\n"), Error);
}

}  // TEST_SUITE
