#include "egostance/senm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "egostance/error.hpp"
#include "egostance/parallel.hpp"

namespace egostance {

namespace {

bool is_token_char(unsigned char c) { return std::isalnum(c) || c == '\'' || c >= 0x80; }

struct Token {
  std::string raw;
  std::string lower;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_token_char(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && is_token_char(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      Token t;
      t.raw = std::string(text.substr(i, j - i));
      // Apostrophes only glue contractions; strip them at token edges.
      while (!t.raw.empty() && t.raw.front() == '\'') t.raw.erase(t.raw.begin());
      while (!t.raw.empty() && t.raw.back() == '\'') t.raw.pop_back();
      if (!t.raw.empty()) {
        t.lower = t.raw;
        for (char& c : t.lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        out.push_back(std::move(t));
      }
    }
    i = j;
  }
  return out;
}

bool all_caps(std::string_view s) {
  bool alpha = false;
  for (unsigned char c : s) {
    if (std::isalpha(c)) {
      alpha = true;
      if (!std::isupper(c)) return false;
    }
  }
  return alpha;
}

double toward(double value, double increment) { return value >= 0 ? value + increment : value - increment; }

}  // namespace

std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::Negative: return "negative";
    case Polarity::Neutral: return "neutral";
    case Polarity::Positive: return "positive";
  }
  return "neutral";
}

std::string_view to_string(Sign s) { return s == Sign::Positive ? "positive" : "negative"; }

Sign parse_sign(std::string_view s) {
  if (s == "positive" || s == "+") return Sign::Positive;
  if (s == "negative" || s == "-") return Sign::Negative;
  throw Error(ErrorKind::Parse, "unknown sign '" + std::string(s) + "'");
}

const Lexicon& Lexicon::builtin() {
  static const Lexicon lex = [] {
    Lexicon l;
    l.valence = {
        {"good", 1.9},      {"great", 3.1},     {"love", 3.2},       {"nice", 1.8},      {"happy", 2.7},
        {"thanks", 1.9},    {"agree", 1.5},     {"awesome", 3.1},    {"excellent", 2.7}, {"glad", 2.0},
        {"best", 3.2},      {"brilliant", 2.8}, {"fun", 2.3},        {"kind", 2.4},      {"wonderful", 2.7},
        {"respect", 2.1},   {"bad", -2.5},      {"awful", -2.0},     {"terrible", -2.1}, {"hate", -2.7},
        {"horrible", -2.5}, {"worst", -3.1},    {"stupid", -2.4},    {"wrong", -2.1},    {"liar", -2.3},
        {"disgusting", -2.4}, {"pathetic", -2.0}, {"shame", -2.1},   {"angry", -2.3},    {"ridiculous", -1.7},
        {"idiot", -2.3},    {"nonsense", -1.5},
    };
    l.negators = {"not", "no", "never", "nobody", "nothing", "none", "neither", "nor",
                  "without", "can't", "don't", "isn't", "won't", "doesn't", "cannot"};
    l.boosters = {{"very", 0.293},     {"really", 0.293},  {"extremely", 0.293}, {"so", 0.293},
                  {"totally", 0.293},  {"absolutely", 0.293}, {"slightly", -0.293}, {"somewhat", -0.293},
                  {"barely", -0.293}};
    return l;
  }();
  return lex;
}

Lexicon parse_lexicon(std::string_view content) {
  enum class Section { Valence, Negator, Booster } section = Section::Valence;
  Lexicon lex;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.starts_with("#negator")) {
      section = Section::Negator;
      continue;
    }
    if (line.starts_with("#booster")) {
      section = Section::Booster;
      continue;
    }
    if (line.front() == '#') continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    const std::string where = "lexicon line " + std::to_string(lineno) + ": ";
    if (section == Section::Negator) {
      lex.negators.insert(token);
      continue;
    }
    double value = 0.0;
    if (!(fields >> value)) throw Error(ErrorKind::Parse, where + "expected token<TAB>number");
    if (section == Section::Valence) {
      if (value < -4.0 || value > 4.0) throw Error(ErrorKind::Parse, where + "valence outside [-4, 4]");
      lex.valence[token] = value;
    } else {
      lex.boosters[token] = value;
    }
  }
  return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path) { return parse_lexicon(read_file(path)); }

std::string format_lexicon(const Lexicon& lex) {
  std::ostringstream out;
  out.precision(17);
  std::map<std::string, double> v(lex.valence.begin(), lex.valence.end());
  for (const auto& [t, x] : v) out << t << '\t' << x << '\n';
  out << "#negator\n";
  for (const auto& t : lex.negators) out << t << '\n';
  out << "#booster\n";
  std::map<std::string, double> b(lex.boosters.begin(), lex.boosters.end());
  for (const auto& [t, x] : b) out << t << '\t' << x << '\n';
  return out.str();
}

SentimentScore SentimentScore::from_compound(double compound) {
  SentimentScore s;
  s.compound = compound;
  if (compound >= scoring::kPolarityBand) {
    s.polarity = Polarity::Positive;
  } else if (compound <= -scoring::kPolarityBand) {
    s.polarity = Polarity::Negative;
  } else {
    s.polarity = Polarity::Neutral;
  }
  return s;
}

SentimentScore score_text(const Lexicon& lexicon, std::string_view text) {
  using namespace scoring;
  const auto tokens = tokenize(text);

  std::size_t caps_tokens = 0, alpha_tokens = 0;
  for (const auto& t : tokens) {
    if (std::any_of(t.raw.begin(), t.raw.end(), [](unsigned char c) { return std::isalpha(c); })) {
      ++alpha_tokens;
      if (all_caps(t.raw)) ++caps_tokens;
    }
  }
  const bool mixed_case = caps_tokens > 0 && caps_tokens < alpha_tokens;

  double sum = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto it = lexicon.valence.find(tokens[i].lower);
    if (it == lexicon.valence.end() || it->second == 0.0) continue;
    double v = it->second;
    if (mixed_case && all_caps(tokens[i].raw)) v = toward(v, kCapsIncrement);
    if (i >= 1) {
      if (auto b = lexicon.boosters.find(tokens[i - 1].lower); b != lexicon.boosters.end()) v = toward(v, b->second);
    }
    for (int back = 1; back <= kNegationLookback && back <= static_cast<int>(i); ++back) {
      if (lexicon.negators.contains(tokens[i - back].lower)) {
        v *= kNegationScalar;
        break;
      }
    }
    sum += v;
  }

  if (sum != 0.0) {
    const auto bangs = std::min<std::ptrdiff_t>(std::count(text.begin(), text.end(), '!'), kMaxExclamations);
    sum = toward(sum, kExclamationIncrement * static_cast<double>(bangs));
  }
  return SentimentScore::from_compound(sum / std::sqrt(sum * sum + kNormalizationAlpha));
}

SentimentScore score_event(const InteractionEvent& event, const Lexicon& lexicon) {
  if (event.sentiment) return SentimentScore::from_compound(*event.sentiment);
  if (event.text) return score_text(lexicon, *event.text);
  throw Error(ErrorKind::Validation, "unscorable event (" + event.ego + " -> " + event.alter + ")");
}

SignOutcome sign_relationship(std::span<const SentimentScore> scores, const SignRule& rule) {
  if (scores.empty()) throw Error(ErrorKind::Validation, "sign_relationship: no scored interactions");
  SignOutcome out;
  for (const auto& s : scores) {
    if (s.polarity == Polarity::Negative) ++out.n_negative;
    if (rule.count_neutral || s.polarity != Polarity::Neutral) ++out.n_scored;
  }
  if (out.n_scored == 0) return out;  // all neutral with neutrals excluded: nothing negative
  const double ratio = static_cast<double>(out.n_negative) / static_cast<double>(out.n_scored);
  out.sign = ratio > rule.negative_ratio ? Sign::Negative : Sign::Positive;
  return out;
}

namespace {

SignedEgoNetwork sign_from(const EgoNetwork& network, std::span<const InteractionEvent* const> ego_events,
                           const Lexicon& lexicon, const SignRule& rule, const std::set<InteractionKind>& kinds) {
  SignedEgoNetwork out{network, {}, {}};
  std::map<std::string_view, std::vector<SentimentScore>> by_alter;
  for (const InteractionEvent* e : ego_events) {
    if (e->ego != network.ego() || !kinds.contains(e->kind) || !e->scorable()) continue;
    if (!network.find(e->alter)) continue;
    by_alter[e->alter].push_back(score_event(*e, lexicon));
  }
  for (const auto& [alter, scores] : by_alter) {
    const SignOutcome o = sign_relationship(scores, rule);
    out.signs.emplace(alter, o.sign);
    out.tallies.emplace(alter, o);
  }
  return out;
}

}  // namespace

SignedEgoNetwork sign_ego_network(const EgoNetwork& network, std::span<const InteractionEvent> events,
                                  const Lexicon& lexicon, const SignRule& rule,
                                  const std::set<InteractionKind>& kinds) {
  std::vector<const InteractionEvent*> mine;
  for (const auto& e : events) {
    if (e.ego == network.ego()) mine.push_back(&e);
  }
  return sign_from(network, mine, lexicon, rule, kinds);
}

std::vector<SignedEgoNetwork> sign_ego_networks(std::span<const EgoNetwork> networks,
                                                std::span<const InteractionEvent> events, const Lexicon& lexicon,
                                                const SignRule& rule, const std::set<InteractionKind>& kinds,
                                                unsigned threads) {
  std::unordered_map<std::string_view, std::vector<const InteractionEvent*>> by_ego;
  for (const auto& e : events) by_ego[e.ego].push_back(&e);
  std::vector<SignedEgoNetwork> out(networks.size());
  static const std::vector<const InteractionEvent*> kNone;
  parallel_for(networks.size(), threads, [&](std::size_t i) {
    const auto it = by_ego.find(networks[i].ego());
    out[i] = sign_from(networks[i], it == by_ego.end() ? kNone : it->second, lexicon, rule, kinds);
  });
  return out;
}

std::string format_signed_networks(std::span<const SignedEgoNetwork> nets) {
  std::string out;
  for (const auto& n : nets) {
    auto obj = nlohmann::ordered_json::parse(format_ego_network(n.base));
    nlohmann::ordered_json signs = nlohmann::ordered_json::object();
    for (const auto& [alter, s] : n.signs) signs[alter] = std::string(to_string(s));
    obj["signs"] = std::move(signs);
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::vector<SignedEgoNetwork> parse_signed_networks(std::string_view content) {
  auto bases = parse_ego_networks(content);
  std::vector<SignedEgoNetwork> out;
  out.reserve(bases.size());
  std::size_t idx = 0, pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    const std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const auto obj = nlohmann::json::parse(line);
    SignedEgoNetwork s{std::move(bases[idx++]), {}, {}};
    if (obj.contains("signs")) {
      for (const auto& [alter, v] : obj.at("signs").items()) {
        if (!s.base.find(alter)) throw Error(ErrorKind::Parse, "sign for unknown alter '" + alter + "'");
        s.signs.emplace(alter, parse_sign(v.get<std::string>()));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace egostance
