#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "egostance/calendar.hpp"
#include "egostance/enm.hpp"
#include "egostance/error.hpp"
#include "egostance/rng.hpp"
#include "egostance/syngen.hpp"

using namespace egostance;

namespace {

constexpr Timestamp kJan2021 = 1609459200;  // 2021-01-01T00:00:00Z

InteractionEvent at(Timestamp ts, const char* alter = "b", InteractionKind kind = InteractionKind::Reply) {
  InteractionEvent e;
  e.ego = "a";
  e.alter = alter;
  e.ts = ts;
  e.kind = kind;
  return e;
}

Timestamp month_start(int offset) { return calendar::add_months(kJan2021, offset); }

// Events on every `step`-th day of the month, starting on day 1, at noon.
void fill_month(std::vector<InteractionEvent>& out, int offset, unsigned step) {
  const Timestamp m0 = month_start(offset);
  const unsigned dim = calendar::days_in_month(calendar::month_index(m0));
  for (unsigned d = 0; d < dim; d += step) out.push_back(at(m0 + d * calendar::kSecondsPerDay + 43200));
}

// Epanechnikov profile: the density whose gradient ascent a flat kernel mean shift performs.
std::vector<double> kde_grid_modes(const std::vector<double>& values, double bw, double step) {
  const double lo = *std::min_element(values.begin(), values.end()) - bw;
  const double hi = *std::max_element(values.begin(), values.end()) + bw;
  const auto n = static_cast<std::size_t>((hi - lo) / step) + 1;
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lo + step * static_cast<double>(i);
    for (double v : values) f[i] += std::max(0.0, 1.0 - (x - v) * (x - v) / (bw * bw));
  }
  std::vector<double> modes;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (f[i] > f[i - 1] && f[i] >= f[i + 1]) modes.push_back(lo + step * static_cast<double>(i));
  }
  std::sort(modes.rbegin(), modes.rend());
  return modes;
}

Relationship rel(const char* alter, double freq) {
  Relationship r;
  r.ego = "e";
  r.alter = alter;
  r.interaction_count = 1;
  r.frequency = freq;
  return r;
}

EgoNetwork ring_network(std::vector<std::size_t> sizes) {
  std::vector<Relationship> rels;
  std::vector<std::vector<UserId>> rings;
  int k = 0;
  for (std::size_t r = 0; r < sizes.size(); ++r) {
    rings.emplace_back();
    for (std::size_t i = 0; i < sizes[r]; ++i, ++k) {
      const std::string name = "x" + std::to_string(k);
      rels.push_back(rel(name.c_str(), 100.0 / static_cast<double>(r + 1)));
      rings.back().push_back(name);
    }
  }
  return EgoNetwork("e", rels, rings);
}

void check_structure(const EgoNetwork& net) {
  for (std::size_t i = 1; i < net.ring_count(); ++i) {
    const auto inner = net.circle(i), outer = net.circle(i + 1);
    CHECK(std::includes(outer.begin(), outer.end(), inner.begin(), inner.end()));
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& a : net.rings()[i - 1]) lo = std::min(lo, net.find(a)->frequency);
    for (const auto& a : net.rings()[i]) hi = std::max(hi, net.find(a)->frequency);
    CHECK(lo >= hi);
  }
  CHECK(net.circle(net.ring_count()).size() == net.alter_count());
}

}  // namespace

TEST_SUITE("enm") {

TEST_CASE("activity: four-month span is inactive") {
  std::vector<InteractionEvent> ev;
  for (int m = 0; m < 4; ++m) fill_month(ev, m, 1);
  CHECK_FALSE(is_active(ev));
  CHECK_FALSE(is_active({}));
}

TEST_CASE("activity: posting every day for twelve months") {
  std::vector<InteractionEvent> ev;
  for (int m = 0; m < 12; ++m) fill_month(ev, m, 1);
  CHECK(is_active(ev));
}

TEST_CASE("activity: eight months with four or three dense months") {
  // Sparse months post twice; dense months post every third day.
  auto timeline = [](int dense_months) {
    std::vector<InteractionEvent> ev;
    for (int m = 0; m < 8; ++m) {
      if (m < dense_months) {
        fill_month(ev, m, 3);
      } else {
        ev.push_back(at(month_start(m) + 86400));
        ev.push_back(at(month_start(m) + 20 * 86400));
      }
    }
    return ev;
  };
  CHECK(is_active(timeline(4)));
  CHECK_FALSE(is_active(timeline(3)));

  // Direct evaluation of the two clauses on the same timelines.
  for (int dense = 0; dense <= 8; ++dense) {
    const auto ev = timeline(dense);
    std::map<int, std::set<std::int64_t>> days;
    for (const auto& e : ev) days[calendar::month_index(e.ts)].insert(calendar::day_index(e.ts));
    int ok = 0;
    for (const auto& [m, d] : days) ok += d.size() >= (calendar::days_in_month(m) + 2) / 3;
    const bool span = calendar::add_months(ev.front().ts, 6) <= ev.back().ts;
    CHECK(is_active(ev) == (span && 2 * ok >= static_cast<int>(days.size())));
  }
}

TEST_CASE("activity: one fewer posting day than the monthly threshold is sparse") {
  std::vector<InteractionEvent> ev;
  for (int m = 0; m < 8; ++m) {
    const Timestamp m0 = month_start(m);
    const unsigned need = (calendar::days_in_month(calendar::month_index(m0)) + 2) / 3;
    for (unsigned d = 0; d + 1 < need; ++d) ev.push_back(at(m0 + d * 86400));
  }
  CHECK_FALSE(is_active(ev));
}

TEST_CASE("frequency: twelve replies over a six-month ego span") {
  std::vector<InteractionEvent> ev;
  const Timestamp start = kJan2021;
  for (int i = 0; i < 12; ++i) ev.push_back(at(start + i * 86400));
  const ObservationWindow window(start, start + static_cast<Timestamp>(6 * calendar::kSecondsPerMonth));
  const auto rels = contact_frequencies(ev, "a", {InteractionKind::Reply}, window);
  REQUIRE(rels.size() == 1);
  CHECK(rels[0].interaction_count == 12);
  CHECK(rels[0].frequency == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("frequency: kind filter can empty the result") {
  std::vector<InteractionEvent> ev{at(kJan2021, "b", InteractionKind::Mention), at(kJan2021 + 5, "c", InteractionKind::Mention)};
  CHECK(contact_frequencies(ev, "a", {InteractionKind::Reply}, ObservationWindow(kJan2021, kJan2021 + 100)).empty());
}

TEST_CASE("frequency: counts agree with a hash-map group-by") {
  Rng rng(9);
  const ObservationWindow window(kJan2021, month_start(12));
  const char* alters[] = {"b", "c", "d"};
  const InteractionKind kinds[] = {InteractionKind::Reply, InteractionKind::Mention, InteractionKind::Other};
  std::vector<InteractionEvent> ev;
  for (int i = 0; i < 300; ++i) {
    auto e = at(window.start + static_cast<Timestamp>(rng.below(window.end - window.start)), alters[rng.below(3)],
                kinds[rng.below(3)]);
    if (rng.bernoulli(0.1)) e.ego = "z";
    ev.push_back(e);
  }
  const std::set<InteractionKind> use{InteractionKind::Reply, InteractionKind::Mention};
  std::unordered_map<std::string, std::size_t> oracle;
  Timestamp first = window.end;
  for (const auto& e : ev) {
    if (e.ego == "a" && use.contains(e.kind)) {
      ++oracle[e.alter];
      first = std::min(first, e.ts);
    }
  }
  const double months = std::max(1.0, (window.end - first) / calendar::kSecondsPerMonth);
  const auto rels = contact_frequencies(ev, "a", use, window);
  CHECK(rels.size() == oracle.size());
  for (const auto& r : rels) {
    CHECK(r.interaction_count == oracle.at(r.alter));
    CHECK(r.frequency == doctest::Approx(oracle.at(r.alter) / months).epsilon(1e-12));
    CHECK(r.frequency > 0.0);
  }
}

TEST_CASE("mean shift: equal values form one cluster") {
  const std::vector<double> v(7, 3.5);
  const auto c = mean_shift_1d(v);
  REQUIRE(c.modes.size() == 1);
  CHECK(c.modes[0] == 3.5);
  const auto single = mean_shift_1d(std::vector<double>{2.0});
  CHECK(single.modes == std::vector<double>{2.0});
}

TEST_CASE("mean shift: two bunches match the density-scan oracle") {
  const std::vector<double> v{10.0, 10.2, 9.8, 1.0, 1.1, 0.9};
  const auto c = mean_shift_1d(v, 1.0);
  REQUIRE(c.modes.size() == 2);
  const auto oracle = kde_grid_modes(v, 1.0, 0.001);
  REQUIRE(oracle.size() == 2);
  CHECK(std::abs(c.modes[0] - 10.0) <= 0.05);
  CHECK(std::abs(c.modes[1] - 1.0) <= 0.05);
  CHECK(std::abs(c.modes[0] - oracle[0]) <= 0.05);
  CHECK(std::abs(c.modes[1] - oracle[1]) <= 0.05);
  CHECK(std::count(c.assignment.begin(), c.assignment.end(), 0u) == 3);
  CHECK(std::count(c.assignment.begin(), c.assignment.end(), 1u) == 3);
  CHECK(c.assignment[0] == 0);
  CHECK(c.assignment[3] == 1);
}

TEST_CASE("mean shift: planted bunches recovered across seeded trials") {
  int hits = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(77, static_cast<std::uint64_t>(t)));
    const double bw = 1.0;
    const double m1 = 5.0, m2 = m1 + bw * (4.0 + 4.0 * rng.uniform());
    std::vector<double> v;
    for (int i = 0; i < 30; ++i) v.push_back(m1 + 0.15 * bw * rng.normal());
    for (int i = 0; i < 30; ++i) v.push_back(m2 + 0.15 * bw * rng.normal());
    const auto c = mean_shift_1d(v, bw);
    hits += c.modes.size() == 2 && std::abs(c.modes[0] - m2) <= bw / 4 && std::abs(c.modes[1] - m1) <= bw / 4;
  }
  CHECK(hits >= 190);
}

TEST_CASE("mean shift: permutation invariance") {
  Rng rng(21);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v;
    const std::size_t n = 5 + rng.below(60);
    for (std::size_t i = 0; i < n; ++i) v.push_back(std::exp(2.0 * rng.normal()));
    const auto base = mean_shift_1d(v);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<double> shuffled;
    for (auto i : order) shuffled.push_back(v[i]);
    const auto other = mean_shift_1d(shuffled);
    CHECK(other.modes == base.modes);
    CHECK(other.bandwidth == base.bandwidth);
    for (std::size_t i = 0; i < n; ++i) CHECK(other.assignment[i] == base.assignment[order[i]]);
  }
}

TEST_CASE("mean shift: clustering the modes returns the modes") {
  Rng rng(22);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v;
    const std::size_t n = 5 + rng.below(60);
    for (std::size_t i = 0; i < n; ++i) v.push_back(std::exp(2.0 * rng.normal()));
    const auto c = mean_shift_1d(v);
    double bw = c.bandwidth;
    for (std::size_t i = 1; i < c.modes.size(); ++i) bw = std::min(bw, 0.999 * (c.modes[i - 1] - c.modes[i]));
    const auto again = mean_shift_1d(c.modes, bw);
    CHECK(again.modes == c.modes);
    for (std::size_t i = 1; i < c.modes.size(); ++i) CHECK(c.modes[i - 1] - c.modes[i] > c.bandwidth / 2);
  }
}

TEST_CASE("mean shift: wide bandwidth converges to the arithmetic mean") {
  Rng rng(23);
  for (std::size_t n = 1; n <= 12; ++n) {
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(rng.uniform(0.5, 20.0));
    const double span = *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
    const auto c = mean_shift_1d(v, span + 1.0);
    REQUIRE(c.modes.size() == 1);
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
    CHECK(c.modes[0] == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("mean shift: invalid inputs") {
  CHECK_THROWS_AS(mean_shift_1d(std::vector<double>{}), Error);
  CHECK_THROWS_AS(mean_shift_1d(std::vector<double>{1.0, -2.0}), Error);
  CHECK_THROWS_AS(mean_shift_1d(std::vector<double>{1.0, 2.0}, 0.0), Error);
}

TEST_CASE("bandwidth estimate uses the 0.3 quantile neighbour") {
  // n = 4: ceil(1.2) = 2nd nearest neighbour. Distances: 0 -> 2, 1 -> 1, 2 -> 2, 10 -> 9.
  const std::vector<double> v{1.0, 2.0, 3.0, 11.0};
  CHECK(estimate_bandwidth(v) == doctest::Approx((2.0 + 1.0 + 2.0 + 9.0) / 4.0));
  CHECK(estimate_bandwidth(std::vector<double>{4.0, 4.0}) == 0.0);
}

TEST_CASE("one cluster of five alters is one ring") {
  std::vector<Relationship> rels;
  for (const char* a : {"a1", "a2", "a3", "a4", "a5"}) rels.push_back(rel(a, 2.0));
  Clustering c{{2.0}, std::vector<std::size_t>(5, 0), 1.0};
  const auto net = build_ego_network(rels, c);
  REQUIRE(net.ring_count() == 1);
  CHECK(net.rings()[0].size() == 5);
  CHECK(net.circle(1).size() == 5);
}

TEST_CASE("three clusters of 2/13/35 nest as 2/15/50") {
  std::vector<Relationship> rels;
  Clustering c;
  c.modes = {30.0, 10.0, 1.0};
  c.bandwidth = 2.0;
  const std::size_t sizes[] = {2, 13, 35};
  int k = 0;
  for (std::size_t cl = 0; cl < 3; ++cl) {
    for (std::size_t i = 0; i < sizes[cl]; ++i, ++k) {
      rels.push_back(rel(("y" + std::to_string(k)).c_str(), c.modes[cl]));
      c.assignment.push_back(cl);
    }
  }
  const auto net = build_ego_network(rels, c);
  REQUIRE(net.ring_count() == 3);
  std::size_t cum = 0;
  const std::size_t circles[] = {2, 15, 50};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(net.rings()[i].size() == sizes[i]);
    cum += sizes[i];
    CHECK(net.circle(i + 1).size() == cum);
    CHECK(cum == circles[i]);
  }
  check_structure(net);
}

TEST_CASE("clustered frequencies always respect ring ordering") {
  Rng rng(31);
  for (int t = 0; t < 100; ++t) {
    std::vector<Relationship> rels;
    std::vector<double> f;
    const std::size_t n = 1 + rng.below(80);
    for (std::size_t i = 0; i < n; ++i) {
      f.push_back(std::exp(1.5 * rng.normal()));
      rels.push_back(rel(("z" + std::to_string(i)).c_str(), f.back()));
    }
    check_structure(build_ego_network(rels, mean_shift_1d(f)));
  }
}

TEST_CASE("mismatched clustering is rejected") {
  std::vector<Relationship> rels{rel("a", 1.0), rel("b", 2.0)};
  CHECK_THROWS_AS(build_ego_network(rels, Clustering{{1.0}, {0}, 1.0}), Error);
}

TEST_CASE("select edges: rings 2/5/40") {
  const std::vector<EgoNetwork> nets{ring_network({2, 5, 40})};
  CHECK(select_edges(nets, CircleSelector::Inner).size() == 7);
  CHECK(select_edges(nets, CircleSelector::Outer).size() == 40);
  CHECK(select_edges(nets, CircleSelector::Full).size() == 47);
  const std::vector<EgoNetwork> two{ring_network({3, 4})};
  CHECK(select_edges(two, CircleSelector::Outer).empty());
  CHECK(select_edges(two, CircleSelector::Inner).size() == 7);
}

TEST_CASE("syngen networks satisfy nesting, ordering and the inner/outer partition") {
  GeneratorParams p;
  p.n_users = 200;
  p.circle_sizes = {2, 5, 15, 50, 100};
  p.top_rate = 6.0;
  p.months = 9;
  p.posts_per_user = 1.0;
  p.seed = 2;
  const auto ds = generate(p);
  const auto nets = build_ego_networks(ds.events, ds.window, {});
  REQUIRE(nets.size() > 150);
  for (const auto& net : nets) {
    check_structure(net);
    const std::vector<EgoNetwork> one{net};
    std::set<std::string> inner, outer, full;
    for (const auto& e : select_edges(one, CircleSelector::Inner)) inner.insert(e.to);
    for (const auto& e : select_edges(one, CircleSelector::Outer)) outer.insert(e.to);
    for (const auto& e : select_edges(one, CircleSelector::Full)) full.insert(e.to);
    std::set<std::string> both;
    std::set_intersection(inner.begin(), inner.end(), outer.begin(), outer.end(), std::inserter(both, both.end()));
    CHECK(both.empty());
    CHECK(inner.size() + outer.size() == full.size());
    CHECK(full.size() == net.alter_count());
  }
  EnmParams threaded;
  threaded.threads = 3;
  const auto again = build_ego_networks(ds.events, ds.window, threaded);
  CHECK(format_ego_networks(again) == format_ego_networks(nets));
}

TEST_CASE("inactive egos are excluded") {
  std::vector<InteractionEvent> ev;
  for (int m = 0; m < 3; ++m) fill_month(ev, m, 1);
  const auto nets = build_ego_networks(ev, ObservationWindow(kJan2021, month_start(12)), {});
  CHECK(nets.empty());
}

TEST_CASE("ego network jsonl round trip") {
  const auto net = ring_network({2, 3, 6});
  const std::vector<EgoNetwork> nets{net};
  const std::string text = format_ego_networks(nets);
  const auto back = parse_ego_networks(text);
  REQUIRE(back.size() == 1);
  CHECK(back[0].rings() == net.rings());
  CHECK(format_ego_networks(back) == text);
  // The frequencies-only form is accepted.
  const auto legacy = parse_ego_networks(R"({"ego":"e","rings":[["a"],["b"]],"frequencies":{"a":3.0,"b":1.0}})");
  REQUIRE(legacy.size() == 1);
  CHECK(legacy[0].find("a")->frequency == 3.0);
  CHECK_THROWS_AS(parse_ego_networks(R"({"ego":"e","rings":[["a"]],"frequencies":{}})"), Error);
}

}  // TEST_SUITE
