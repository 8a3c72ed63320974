#include <doctest.h>

#include <cmath>
#include <string>

#include "egostance/enm.hpp"
#include "egostance/error.hpp"
#include "egostance/rng.hpp"
#include "egostance/senm.hpp"
#include "egostance/syngen.hpp"

using namespace egostance;

namespace {

const Lexicon& lex() { return Lexicon::builtin(); }

double compound_of(double s) { return s / std::sqrt(s * s + 15.0); }

std::vector<SentimentScore> tally(std::size_t n, std::size_t negative) {
  std::vector<SentimentScore> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(SentimentScore::from_compound(i < negative ? -0.5 : 0.0));
  return v;
}

InteractionEvent ev(const char* ego, const char* alter, std::optional<std::string> text,
                    std::optional<double> sentiment = std::nullopt) {
  InteractionEvent e;
  e.ego = ego;
  e.alter = alter;
  e.ts = 100;
  e.text = std::move(text);
  e.sentiment = sentiment;
  return e;
}

}  // namespace

TEST_SUITE("senm") {

TEST_CASE("empty and unknown text is neutral") {
  const auto s = score_text(lex(), "");
  CHECK(s.compound == 0.0);
  CHECK(s.polarity == Polarity::Neutral);
  CHECK(score_text(lex(), "the thread today!!!").compound == 0.0);
}

TEST_CASE("single token normalization") {
  const auto s = score_text(lex(), "good");
  CHECK(s.compound == doctest::Approx(1.9 / std::sqrt(1.9 * 1.9 + 15.0)).epsilon(1e-12));
  CHECK(s.compound == doctest::Approx(0.4404).epsilon(1e-4));
  CHECK(s.polarity == Polarity::Positive);
}

TEST_CASE("negation flips and damps") {
  const auto s = score_text(lex(), "not good");
  CHECK(s.compound == doctest::Approx(compound_of(1.9 * -0.74)).epsilon(1e-12));
  CHECK(s.compound == doctest::Approx(-0.3412).epsilon(1e-4));
  CHECK(s.polarity == Polarity::Negative);
  // Three tokens back still negates; four does not.
  CHECK(score_text(lex(), "not a b good").compound == doctest::Approx(compound_of(-1.406)));
  CHECK(score_text(lex(), "not a b c good").compound == doctest::Approx(compound_of(1.9)));
}

TEST_CASE("boosters, caps and exclamations") {
  CHECK(score_text(lex(), "very good").compound == doctest::Approx(compound_of(1.9 + 0.293)));
  CHECK(score_text(lex(), "very bad").compound == doctest::Approx(compound_of(-2.5 - 0.293)));
  CHECK(score_text(lex(), "slightly good").compound == doctest::Approx(compound_of(1.9 - 0.293)));
  CHECK(score_text(lex(), "that is GOOD").compound == doctest::Approx(compound_of(1.9 + 0.733)));
  // All-caps text has no emphasis contrast.
  CHECK(score_text(lex(), "GOOD").compound == doctest::Approx(compound_of(1.9)));
  CHECK(score_text(lex(), "good!").compound == doctest::Approx(compound_of(1.9 + 0.292)));
  CHECK(score_text(lex(), "bad!!!!!").compound == doctest::Approx(compound_of(-2.5 - 3 * 0.292)));
}

TEST_CASE("compound stays inside (-1, 1)") {
  std::string many;
  for (int i = 0; i < 200; ++i) many += "LOVE best ";
  const double c = score_text(lex(), many + "!!!").compound;
  CHECK(c < 1.0);
  CHECK(c > 0.99);
  Rng rng(3);
  const char* words[] = {"good", "bad", "hate", "love", "not", "very", "today", "WORST", "!"};
  for (int t = 0; t < 500; ++t) {
    std::string s;
    for (std::uint64_t k = rng.below(30); k > 0; --k) s += std::string(words[rng.below(9)]) + " ";
    const double x = score_text(lex(), s).compound;
    CHECK(x > -1.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("appending a positive token never lowers the compound") {
  Rng rng(4);
  const char* vocab[] = {"good", "bad", "hate", "love", "great", "wrong", "today", "thread", "awful", "kind"};
  const char* positives[] = {"good", "love", "great", "kind", "best"};
  for (int t = 0; t < 1000; ++t) {
    std::string s;
    for (std::uint64_t k = rng.below(12); k > 0; --k) s += std::string(vocab[rng.below(10)]) + " ";
    const double before = score_text(lex(), s).compound;
    const double after = score_text(lex(), s + positives[rng.below(5)]).compound;
    CHECK(after >= before);
  }
}

TEST_CASE("precomputed sentiment takes precedence") {
  CHECK(score_event(ev("a", "b", "love it", -0.5), lex()).polarity == Polarity::Negative);
  CHECK(score_event(ev("a", "b", std::nullopt, 0.0), lex()).polarity == Polarity::Neutral);
  const auto only_text = score_event(ev("a", "b", "not good"), lex());
  CHECK(only_text.compound == score_text(lex(), "not good").compound);
  CHECK_THROWS_AS(score_event(ev("a", "b", std::nullopt), lex()), Error);
}

TEST_CASE("polarity bands") {
  CHECK(SentimentScore::from_compound(0.05).polarity == Polarity::Positive);
  CHECK(SentimentScore::from_compound(-0.05).polarity == Polarity::Negative);
  CHECK(SentimentScore::from_compound(0.0499).polarity == Polarity::Neutral);
}

TEST_CASE("sign examples") {
  CHECK(sign_relationship(tally(10, 0)).sign == Sign::Positive);
  const auto two = sign_relationship(tally(10, 2));
  CHECK(two.sign == Sign::Negative);
  CHECK(two.n_scored == 10);
  CHECK(two.n_negative == 2);
  CHECK(sign_relationship(tally(100, 17)).sign == Sign::Positive);
  CHECK(sign_relationship(tally(100, 18)).sign == Sign::Negative);
  CHECK_THROWS_AS(sign_relationship({}), Error);
}

TEST_CASE("sign is a single step at floor(0.17 n) + 1") {
  for (std::size_t n = 1; n <= 100; ++n) {
    const std::size_t step = 17 * n / 100 + 1;
    for (std::size_t k = 0; k <= n; ++k) {
      const auto o = sign_relationship(tally(n, k));
      CHECK(o.n_scored == n);
      CHECK((o.sign == Sign::Negative) == (k >= step));
    }
  }
}

TEST_CASE("neutrals can be excluded from the denominator") {
  SignRule rule;
  rule.count_neutral = false;
  const auto o = sign_relationship(tally(10, 1), rule);
  CHECK(o.n_scored == 1);
  CHECK(o.sign == Sign::Negative);
}

TEST_CASE("signed network covers only scorable alters") {
  std::vector<Relationship> rels;
  for (const char* a : {"b", "c", "d"}) {
    Relationship r;
    r.ego = "a";
    r.alter = a;
    r.interaction_count = 1;
    r.frequency = 1.0;
    rels.push_back(r);
  }
  const EgoNetwork net("a", rels, {{"b", "c", "d"}});
  std::vector<InteractionEvent> events{ev("a", "b", "love"), ev("a", "b", "good"), ev("a", "c", std::nullopt, 0.6),
                                       ev("a", "d", std::nullopt), ev("b", "a", "hate"), ev("a", "z", "hate")};
  const auto s = sign_ego_network(net, events, lex());
  CHECK(s.signs.size() == 2);
  CHECK(s.signs.at("b") == Sign::Positive);
  CHECK(s.signs.at("c") == Sign::Positive);
  CHECK_FALSE(s.signs.contains("d"));
  CHECK(s.tallies.at("b").n_scored == 2);
}

TEST_CASE("planted signs recovered on polarized syngen data") {
  GeneratorParams p;
  p.n_users = 200;
  p.circle_sizes = {2, 5, 15, 50, 100};
  p.months = 8;
  p.posts_per_user = 0.0;
  p.negative_rate_cross = 1.0;
  p.negative_rate_same = 0.0;
  p.seed = 17;
  const auto ds = generate(p);
  const auto nets = build_ego_networks(ds.events, ds.window, {});
  const auto signed_nets = sign_ego_networks(nets, ds.events, lex(), {}, EnmParams{}.kinds, 2);
  std::size_t checked = 0, agree = 0;
  for (const auto& s : signed_nets) {
    for (const auto& [alter, sign] : s.signs) {
      CHECK(s.base.find(alter) != nullptr);
      if (s.tallies.at(alter).n_scored < 6) continue;
      ++checked;
      agree += ds.truth->sign_of.at({s.base.ego(), alter}) == sign;
    }
  }
  REQUIRE(checked > 1000);
  CHECK(static_cast<double>(agree) >= 0.99 * static_cast<double>(checked));
}

TEST_CASE("all-positive ego signs everything positive") {
  GeneratorParams p;
  p.n_users = 200;
  p.circle_sizes = {2, 5, 15, 50, 100};
  p.months = 8;
  p.posts_per_user = 0.0;
  p.negative_rate_cross = 0.0;
  p.negative_rate_same = 0.0;
  p.seed = 18;
  const auto ds = generate(p);
  const auto nets = build_ego_networks(ds.events, ds.window, {});
  for (const auto& s : sign_ego_networks(nets, ds.events, lex(), {}, EnmParams{}.kinds, 1)) {
    for (const auto& [alter, sign] : s.signs) CHECK(sign == Sign::Positive);
  }
}

TEST_CASE("lexicon and signed network files round-trip") {
  const Lexicon back = parse_lexicon(format_lexicon(lex()));
  CHECK(back.valence == lex().valence);
  CHECK(back.negators == lex().negators);
  CHECK(back.boosters == lex().boosters);
  CHECK_THROWS_AS(parse_lexicon("good\t5.0\n"), Error);

  std::vector<Relationship> rels;
  for (const char* a : {"b", "c"}) {
    Relationship r;
    r.ego = "a";
    r.alter = a;
    r.interaction_count = 3;
    r.frequency = 0.5;
    rels.push_back(r);
  }
  SignedEgoNetwork s{EgoNetwork("a", rels, {{"b"}, {"c"}}), {{"b", Sign::Negative}}, {}};
  const std::vector<SignedEgoNetwork> nets{s};
  const std::string text = format_signed_networks(nets);
  const auto parsed = parse_signed_networks(text);
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0].signs == s.signs);
  CHECK(format_signed_networks(parsed) == text);
}

}  // TEST_SUITE
