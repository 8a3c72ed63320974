#include "egostance/syngen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

#include "egostance/calendar.hpp"
#include "egostance/error.hpp"
#include "egostance/rng.hpp"

namespace egostance {

namespace {

constexpr int kInactiveMonths = 3;

// Event vocabulary; valenced words are all in Lexicon::builtin().
constexpr std::array kPositiveWords{"good", "great", "love", "nice", "happy", "thanks", "agree", "awesome",
                                    "excellent", "glad", "best", "brilliant", "fun", "kind", "wonderful", "respect"};
constexpr std::array kNegativeWords{"bad", "awful", "terrible", "hate", "horrible", "worst", "stupid", "wrong",
                                    "liar", "disgusting", "pathetic", "shame", "angry", "ridiculous", "idiot",
                                    "nonsense"};
constexpr std::array kNeutralWords{"today", "thread", "see", "post", "reply", "link", "point", "read",
                                   "yesterday", "video", "update", "question"};
// Post vocabulary, deliberately outside the sentiment lexicon.
constexpr std::array kFavorWords{"support", "vote", "forward", "hopeful", "win", "leader", "believe", "proud"};
constexpr std::array kAgainstWords{"oppose", "reject", "fraud", "corrupt", "dump", "stop", "failed", "resign"};
constexpr std::array kPostNeutralWords{"debate", "rally", "news", "campaign", "election", "policy", "speech",
                                       "poll", "interview", "tonight"};
constexpr double kPostTokenFlip = 0.2;

template <std::size_t N>
const char* pick(const std::array<const char*, N>& words, Rng& rng) {
  return words[rng.below(N)];
}

std::string user_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "u%05zu", i);
  return buf;
}

Stance flip(Stance s) { return s == Stance::Favor ? Stance::Against : Stance::Favor; }

std::string event_text(bool negative, Rng& rng) {
  std::string t;
  if (negative) {
    t = pick(kNegativeWords, rng);
    if (rng.bernoulli(0.5)) t += std::string(" ") + pick(kNeutralWords, rng);
    if (rng.bernoulli(0.3)) t += std::string(" ") + pick(kNegativeWords, rng);
  } else if (rng.bernoulli(0.7)) {
    t = pick(kPositiveWords, rng);
    if (rng.bernoulli(0.5)) t += std::string(" ") + pick(kNeutralWords, rng);
  } else {
    t = std::string(pick(kNeutralWords, rng)) + " " + pick(kNeutralWords, rng);
  }
  return t;
}

double event_sentiment(bool negative, Rng& rng) {
  if (negative) return -rng.uniform(0.1, 0.95);
  if (rng.bernoulli(0.7)) return rng.uniform(0.1, 0.95);
  return 0.0;
}

InteractionKind draw_kind(Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.6) return InteractionKind::Reply;
  if (u < 0.9) return InteractionKind::Mention;
  return InteractionKind::Other;
}

std::string post_text(Stance stance, const std::string& target, Rng& rng) {
  std::string t = "#" + target;
  for (int i = 0; i < 2; ++i) {
    const Stance shown = rng.bernoulli(kPostTokenFlip) ? flip(stance) : stance;
    t += ' ';
    t += shown == Stance::Favor ? pick(kFavorWords, rng) : pick(kAgainstWords, rng);
  }
  for (int i = 0; i < 3; ++i) {
    t += ' ';
    t += pick(kPostNeutralWords, rng);
  }
  return t;
}

}  // namespace

void validate(const GeneratorParams& p) {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::Validation, "generator: " + m); };
  if (p.circle_sizes.empty()) fail("circle_sizes must not be empty");
  for (std::size_t i = 1; i < p.circle_sizes.size(); ++i) {
    if (p.circle_sizes[i] <= p.circle_sizes[i - 1]) fail("circle_sizes must be strictly increasing");
  }
  if (p.circle_sizes.front() == 0) fail("circle sizes must be positive");
  const std::size_t min_users = p.circle_sizes.back() + 1;
  if (p.n_users < min_users) {
    fail("n_users = " + std::to_string(p.n_users) + " cannot honour a largest circle of " +
         std::to_string(p.circle_sizes.back()) + "; use at least " + std::to_string(min_users) + " users");
  }
  if (p.targets.empty()) fail("at least one target required");
  std::set<std::string> names(p.targets.begin(), p.targets.end());
  if (names.size() != p.targets.size() || names.contains("")) fail("targets must be distinct and non-empty");
  if (!(p.homophily >= 0.5 && p.homophily <= 1.0)) fail("homophily must be in [0.5, 1]");
  auto unit = [&](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) fail(std::string(what) + " must be in [0, 1]");
  };
  unit(p.stance_correlation, "stance_correlation");
  unit(p.negative_rate_cross, "negative_rate_cross");
  unit(p.negative_rate_same, "negative_rate_same");
  unit(p.inactive_fraction, "inactive_fraction");
  unit(p.text_accuracy, "text_accuracy");
  if (p.months < 1) fail("months must be >= 1");
  if (!(p.top_rate > 0.0) || !(p.ring_decay >= 1.0) || p.rate_jitter < 0.0) fail("invalid interaction-rate shape");
  if (p.posts_per_user < 0.0) fail("posts_per_user must be >= 0");
}

Dataset generate(const GeneratorParams& params) {
  validate(params);
  Rng rng(params.seed);
  Dataset ds;
  ds.window = ObservationWindow(params.start_ts, calendar::add_months(params.start_ts, params.months));
  GroundTruth truth;

  const std::size_t n = params.n_users;
  std::vector<UserId> users(n);
  std::vector<Stance> camp(n);
  std::vector<bool> inactive(n);
  for (std::size_t i = 0; i < n; ++i) {
    users[i] = user_name(i + 1);
    camp[i] = rng.bernoulli(0.5) ? Stance::Favor : Stance::Against;
    inactive[i] = rng.bernoulli(params.inactive_fraction);
    for (std::size_t t = 0; t < params.targets.size(); ++t) {
      const Stance s = (t == 0 || rng.bernoulli(params.stance_correlation)) ? camp[i] : flip(camp[i]);
      truth.stance_of.emplace(std::pair{users[i], params.targets[t]}, s);
    }
  }
  std::vector<std::size_t> favor_pool, against_pool;
  for (std::size_t i = 0; i < n; ++i) (camp[i] == Stance::Favor ? favor_pool : against_pool).push_back(i);

  // Ring sizes from the nested circle targets.
  std::vector<std::size_t> ring_sizes;
  for (std::size_t r = 0; r < params.circle_sizes.size(); ++r) {
    ring_sizes.push_back(params.circle_sizes[r] - (r ? params.circle_sizes[r - 1] : 0));
  }

  const Timestamp inactive_end =
      std::min(ds.window.end, calendar::add_months(params.start_ts, std::min(params.months, kInactiveMonths)));

  for (std::size_t ego = 0; ego < n; ++ego) {
    std::vector<std::size_t> same, cross;
    for (std::size_t u : camp[ego] == Stance::Favor ? favor_pool : against_pool) {
      if (u != ego) same.push_back(u);
    }
    cross = camp[ego] == Stance::Favor ? against_pool : favor_pool;

    std::vector<std::size_t> alters;
    const std::size_t want = params.circle_sizes.back();
    while (alters.size() < want) {
      bool use_same = rng.bernoulli(params.homophily);
      if (same.empty()) use_same = false;
      if (cross.empty()) use_same = true;
      auto& pool = use_same ? same : cross;
      const std::size_t k = rng.below(pool.size());
      alters.push_back(pool[k]);
      pool[k] = pool.back();
      pool.pop_back();
    }

    // Log-normal per-alter activity, ranked, then rescaled ring by ring so the rank groups
    // line up with the circle targets.
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t a : alters) ranked.emplace_back(rng.normal(), a);
    std::sort(ranked.begin(), ranked.end(), std::greater<>());

    const Timestamp active_end = inactive[ego] ? inactive_end : ds.window.end;
    const double active_months = static_cast<double>(active_end - params.start_ts) / calendar::kSecondsPerMonth;

    std::size_t pos = 0;
    for (std::size_t r = 0; r < ring_sizes.size(); ++r) {
      const double ring_rate = params.top_rate / std::pow(params.ring_decay, static_cast<double>(r));
      for (std::size_t k = 0; k < ring_sizes[r]; ++k, ++pos) {
        const auto [z, alter] = ranked[pos];
        const double rate = ring_rate * std::exp(params.rate_jitter * z);
        const std::size_t count = std::max<std::uint64_t>(1, rng.poisson(rate * active_months));
        const bool same_side = camp[ego] == camp[alter];
        const double neg_rate = same_side ? params.negative_rate_same : params.negative_rate_cross;
        truth.sign_of.emplace(std::pair{users[ego], users[alter]},
                              neg_rate > SignRule{}.negative_ratio ? Sign::Negative : Sign::Positive);
        for (std::size_t c = 0; c < count; ++c) {
          InteractionEvent e;
          e.ego = users[ego];
          e.alter = users[alter];
          e.ts = params.start_ts + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(active_end - params.start_ts)));
          e.kind = draw_kind(rng);
          const bool negative = rng.bernoulli(neg_rate);
          if (params.event_text) {
            e.text = event_text(negative, rng);
          } else {
            e.sentiment = event_sentiment(negative, rng);
          }
          ds.events.push_back(std::move(e));
        }
      }
    }
  }
  std::stable_sort(ds.events.begin(), ds.events.end(),
                   [](const InteractionEvent& a, const InteractionEvent& b) { return a.ts < b.ts; });

  // Posts: user-level stance, token-bag text.
  std::size_t post_no = 0;
  auto add_post = [&](std::size_t author, const std::string& target) {
    Post p;
    char buf[32];
    std::snprintf(buf, sizeof buf, "p%06zu", ++post_no);
    p.id = buf;
    p.author = users[author];
    p.target = target;
    p.stance = truth.stance_of.at({p.author, target});
    p.ts = params.start_ts + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(ds.window.end - ds.window.start)));
    p.text = post_text(p.stance, target, rng);
    ds.posts.push_back(std::move(p));
  };
  for (const auto& target : params.targets) {
    if (params.posts_per_target > 0) {
      for (std::size_t k = 0; k < params.posts_per_target; ++k) add_post(rng.below(n), target);
    } else {
      for (std::size_t u = 0; u < n; ++u) {
        const auto count = rng.poisson(params.posts_per_user);
        for (std::uint64_t k = 0; k < count; ++k) add_post(u, target);
      }
    }
  }

  // Simulated text-model output.
  for (const auto& p : ds.posts) {
    ExternalPrediction pred;
    pred.label = rng.bernoulli(params.text_accuracy) ? p.stance : flip(p.stance);
    pred.confidence = rng.uniform(0.5, 1.0);
    ds.predictions.emplace(p.id, pred);
  }

  for (AuxKind kind : {AuxKind::Likes, AuxKind::Followers, AuxKind::Friends}) {
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t k = 0; k < params.aux_degree; ++k) {
        const bool same_side = rng.bernoulli(params.homophily);
        const auto& pool = (camp[u] == Stance::Favor) == same_side ? favor_pool : against_pool;
        if (pool.empty()) continue;
        const std::size_t v = pool[rng.below(pool.size())];
        if (v != u) edges.emplace(u, v);
      }
    }
    AuxGraph g;
    g.kind = kind;
    for (const auto& [a, b] : edges) g.edges.emplace_back(users[a], users[b]);
    ds.aux_graphs.push_back(std::move(g));
  }

  ds.truth = std::move(truth);
  return ds;
}

std::string files::aux_graph(AuxKind kind) { return std::string(to_string(kind)) + ".txt"; }

std::string format_ground_truth(const GroundTruth& truth, const ObservationWindow& window) {
  nlohmann::ordered_json j;
  auto& stances = j["stances"] = nlohmann::ordered_json::array();
  for (const auto& [key, s] : truth.stance_of) {
    stances.push_back({{"user", key.first}, {"target", key.second}, {"stance", std::string(to_string(s))}});
  }
  auto& signs = j["signs"] = nlohmann::ordered_json::array();
  for (const auto& [key, s] : truth.sign_of) {
    signs.push_back({{"ego", key.first}, {"alter", key.second}, {"sign", std::string(to_string(s))}});
  }
  j["window"] = {{"start", window.start}, {"end", window.end}};
  return j.dump() + "\n";
}

std::pair<GroundTruth, std::optional<ObservationWindow>> parse_ground_truth(std::string_view content) {
  try {
    const auto j = nlohmann::json::parse(content);
    GroundTruth t;
    for (const auto& s : j.at("stances")) {
      t.stance_of.emplace(std::pair{s.at("user").get<std::string>(), s.at("target").get<std::string>()},
                          parse_stance(s.at("stance").get<std::string>()));
    }
    for (const auto& s : j.at("signs")) {
      t.sign_of.emplace(std::pair{s.at("ego").get<std::string>(), s.at("alter").get<std::string>()},
                        parse_sign(s.at("sign").get<std::string>()));
    }
    std::optional<ObservationWindow> w;
    if (j.contains("window")) w = ObservationWindow(j["window"].at("start").get<Timestamp>(), j["window"].at("end").get<Timestamp>());
    return {std::move(t), w};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("ground truth: ") + e.what());
  }
}

std::vector<std::filesystem::path> emit(const Dataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& content) {
    write_file(dir / name, content);
    written.push_back(dir / name);
  };
  put(files::kInteractions, format_interactions(ds.events));
  put(files::kPosts, format_posts(ds.posts));
  for (const auto& g : ds.aux_graphs) put(files::aux_graph(g.kind), format_aux_graph(g));
  put(files::kPredictions, format_predictions(ds.predictions));
  if (ds.truth) put(files::kGroundTruth, format_ground_truth(*ds.truth, ds.window));
  return written;
}

Dataset load_dataset(const std::filesystem::path& dir, std::optional<ObservationWindow> window) {
  namespace fs = std::filesystem;
  Dataset ds;
  if (fs::exists(dir / files::kGroundTruth)) {
    auto [truth, w] = parse_ground_truth(read_file(dir / files::kGroundTruth));
    ds.truth = std::move(truth);
    if (!window && w) window = w;
  }
  const auto interactions = dir / files::kInteractions;
  if (!window) {
    const ObservationWindow all(std::numeric_limits<Timestamp>::min(), std::numeric_limits<Timestamp>::max());
    auto load = load_interactions(interactions, all);
    if (load.events.empty()) throw Error(ErrorKind::Validation, "no interactions to derive a window from");
    Timestamp lo = load.events.front().ts, hi = lo;
    for (const auto& e : load.events) {
      lo = std::min(lo, e.ts);
      hi = std::max(hi, e.ts);
    }
    window = ObservationWindow(lo, hi + 1);
  }
  ds.window = *window;
  ds.events = load_interactions(interactions, ds.window).events;
  if (fs::exists(dir / files::kPosts)) ds.posts = load_posts(dir / files::kPosts);
  for (AuxKind kind : {AuxKind::Likes, AuxKind::Followers, AuxKind::Friends}) {
    const auto p = dir / files::aux_graph(kind);
    if (fs::exists(p)) ds.aux_graphs.push_back(load_aux_graph(p, kind));
  }
  if (fs::exists(dir / files::kPredictions)) ds.predictions = load_predictions(dir / files::kPredictions);
  return ds;
}

}  // namespace egostance
