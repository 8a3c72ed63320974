#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "egostance/error.hpp"
#include "egostance/syngen.hpp"

using namespace egostance;
namespace fs = std::filesystem;

namespace {

GeneratorParams small(std::uint64_t seed) {
  GeneratorParams p;
  p.n_users = 200;
  p.circle_sizes = {2, 5, 15, 50, 100};
  p.top_rate = 4.0;
  p.months = 8;
  p.posts_per_user = 2.0;
  p.aux_degree = 5;
  p.seed = seed;
  return p;
}

std::uint64_t checksum(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) h = (h ^ c) * 1099511628211ULL;
  return h;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("egostance_syngen_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_SUITE("syngen") {

TEST_CASE("same seed gives byte-identical output") {
  const auto a = generate(small(11));
  const auto b = generate(small(11));
  CHECK(format_interactions(a.events) == format_interactions(b.events));
  CHECK(format_posts(a.posts) == format_posts(b.posts));
  CHECK(format_predictions(a.predictions) == format_predictions(b.predictions));
  CHECK(format_ground_truth(*a.truth, a.window) == format_ground_truth(*b.truth, b.window));
  const auto c = generate(small(12));
  CHECK(format_interactions(a.events) != format_interactions(c.events));
}

TEST_CASE("alpha 0.5 plants half same-stance edges") {
  auto p = small(3);
  p.homophily = 0.5;
  const auto ds = generate(p);
  const auto& truth = *ds.truth;
  std::size_t same = 0, total = 0;
  for (const auto& [pair, sign] : truth.sign_of) {
    const Stance a = truth.stance_of.at({pair.first, p.targets[0]});
    const Stance b = truth.stance_of.at({pair.second, p.targets[0]});
    same += a == b;
    ++total;
  }
  REQUIRE(total >= 10000);
  const double frac = static_cast<double>(same) / static_cast<double>(total);
  // Binomial 99.9% half-width at n >= 10,000 is under 0.017; the tolerance is 0.05.
  CHECK(std::abs(frac - 0.5) <= 0.05);
}

TEST_CASE("negative tone matches the analytic mixture") {
  auto p = small(4);
  p.homophily = 0.9;
  p.negative_rate_cross = 0.6;
  p.negative_rate_same = 0.05;
  p.event_text = false;
  const auto ds = generate(p);
  std::size_t neg = 0;
  for (const auto& e : ds.events) neg += *e.sentiment < 0.0;
  const double frac = static_cast<double>(neg) / static_cast<double>(ds.events.size());
  const double expected = 0.9 * 0.05 + 0.1 * 0.6;
  CHECK(expected == doctest::Approx(0.105));
  CHECK(std::abs(frac - expected) <= 0.02);
}

TEST_CASE("too few users for the outer circle is an error with advice") {
  auto p = small(1);
  p.n_users = 100;
  try {
    generate(p);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    CHECK(std::string(e.what()).find("at least 101") != std::string::npos);
  }
  p = small(1);
  p.circle_sizes = {5, 5, 10};
  CHECK_THROWS_AS(generate(p), Error);
  p = small(1);
  p.homophily = 0.4;
  CHECK_THROWS_AS(generate(p), Error);
}

TEST_CASE("emitted corpus reloads into a consistent dataset") {
  const auto ds = generate(small(5));
  const auto dir = scratch("reload");
  emit(ds, dir);
  const auto back = load_dataset(dir);
  CHECK(back.events == ds.events);
  CHECK(back.posts == ds.posts);
  CHECK(back.predictions == ds.predictions);
  CHECK(back.window.start == ds.window.start);
  CHECK(back.window.end == ds.window.end);
  const auto report = validate_corpus(back.events, back.posts, back.aux_graphs, back.predictions);
  CHECK(report.empty());
  fs::remove_all(dir);
}

TEST_CASE("ground truth covers every post author") {
  const auto ds = generate(small(6));
  const auto dir = scratch("truth");
  emit(ds, dir);
  const auto [truth, window] = parse_ground_truth(read_file(dir / files::kGroundTruth));
  REQUIRE(window.has_value());
  for (const auto& post : load_posts(dir / files::kPosts)) {
    const auto it = truth.stance_of.find({post.author, post.target});
    REQUIRE(it != truth.stance_of.end());
    CHECK(it->second == post.stance);
  }
  fs::remove_all(dir);
}

TEST_CASE("re-emitting to the same directory reproduces the bytes") {
  const auto ds = generate(small(7));
  const auto dir = scratch("reemit");
  const auto paths = emit(ds, dir);
  std::map<std::string, std::uint64_t> first;
  for (const auto& p : paths) first[p.filename().string()] = checksum(read_file(p));
  emit(ds, dir);
  for (const auto& p : paths) CHECK(checksum(read_file(p)) == first[p.filename().string()]);
  CHECK(first.size() == 7);
  fs::remove_all(dir);
}

TEST_CASE("fixed post counts per target") {
  auto p = small(8);
  p.posts_per_target = 300;
  const auto ds = generate(p);
  std::map<std::string, std::size_t> per;
  for (const auto& post : ds.posts) ++per[post.target];
  CHECK(per["A"] == 300);
  CHECK(per["B"] == 300);
}

}  // TEST_SUITE
