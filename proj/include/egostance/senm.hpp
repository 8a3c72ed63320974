#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "egostance/corpus.hpp"
#include "egostance/enm.hpp"

namespace egostance {

/// Token valences plus the two modifier classes the scorer understands.
struct Lexicon {
  std::unordered_map<std::string, double> valence;  // in [-4, 4]
  std::set<std::string> negators;
  std::unordered_map<std::string, double> boosters;  // signed increment (negative = dampener)

  /// Compact built-in lexicon covering the synthetic generator's vocabulary.
  static const Lexicon& builtin();
};

/// lexicon.tsv: `token<TAB>valence` lines, switching to negator / booster entries after
/// `#negator` / `#booster` section markers (booster lines are `token<TAB>increment`).
Lexicon parse_lexicon(std::string_view content);
Lexicon load_lexicon(const std::filesystem::path& path);
std::string format_lexicon(const Lexicon& lex);

enum class Polarity { Negative, Neutral, Positive };
enum class Sign { Positive, Negative };

std::string_view to_string(Polarity p);
std::string_view to_string(Sign s);
Sign parse_sign(std::string_view s);

struct SentimentScore {
  double compound = 0.0;
  Polarity polarity = Polarity::Neutral;

  /// Wraps a compound score with the +-0.05 polarity bands.
  static SentimentScore from_compound(double compound);
};

namespace scoring {
inline constexpr double kNegationScalar = -0.74;
inline constexpr double kCapsIncrement = 0.733;
inline constexpr double kExclamationIncrement = 0.292;
inline constexpr int kMaxExclamations = 3;
inline constexpr int kNegationLookback = 3;
inline constexpr double kNormalizationAlpha = 15.0;
inline constexpr double kPolarityBand = 0.05;
}  // namespace scoring

SentimentScore score_text(const Lexicon& lexicon, std::string_view text);
/// A precomputed sentiment wins over text. Throws Error(Validation) "unscorable event" if neither is present.
SentimentScore score_event(const InteractionEvent& event, const Lexicon& lexicon);

struct SignRule {
  double negative_ratio = 0.17;
  bool count_neutral = true;  // neutral interactions enter the denominator
};

struct SignOutcome {
  Sign sign = Sign::Positive;
  std::size_t n_scored = 0;
  std::size_t n_negative = 0;
};

/// Negative iff n_negative / n_scored strictly exceeds the rule's ratio.
SignOutcome sign_relationship(std::span<const SentimentScore> scores, const SignRule& rule = {});

struct SignedEgoNetwork {
  EgoNetwork base;
  std::map<UserId, Sign> signs;
  std::map<UserId, SignOutcome> tallies;
};

/// Groups the ego's outgoing events per alter (same kinds that built the network), scores and signs them.
SignedEgoNetwork sign_ego_network(const EgoNetwork& network, std::span<const InteractionEvent> events,
                                  const Lexicon& lexicon, const SignRule& rule = {},
                                  const std::set<InteractionKind>& kinds = {InteractionKind::Reply,
                                                                            InteractionKind::Mention});

/// Batch form: indexes events by ego once.
std::vector<SignedEgoNetwork> sign_ego_networks(std::span<const EgoNetwork> networks,
                                                std::span<const InteractionEvent> events, const Lexicon& lexicon,
                                                const SignRule& rule, const std::set<InteractionKind>& kinds,
                                                unsigned threads = 1);

// signed_networks.jsonl: ego network line plus "signs":{alter:"positive"|"negative"}.
std::string format_signed_networks(std::span<const SignedEgoNetwork> nets);
std::vector<SignedEgoNetwork> parse_signed_networks(std::string_view content);

}  // namespace egostance
