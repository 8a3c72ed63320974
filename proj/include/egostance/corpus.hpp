#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace egostance {

using UserId = std::string;
using PostId = std::string;
using Timestamp = std::int64_t;  // UTC seconds

enum class Stance { Favor, Against };
enum class InteractionKind { Reply, Mention, Other };
enum class AuxKind { Likes, Followers, Friends };

std::string_view to_string(Stance s);
std::string_view to_string(InteractionKind k);
std::string_view to_string(AuxKind k);

/// Case-insensitive; throws Error(Parse) with "unknown stance" for anything else.
Stance parse_stance(std::string_view s);
InteractionKind parse_interaction_kind(std::string_view s);
AuxKind parse_aux_kind(std::string_view s);

struct ObservationWindow {
  Timestamp start = 0;
  Timestamp end = 0;

  ObservationWindow() = default;
  /// Throws Error(Validation) unless start < end.
  ObservationWindow(Timestamp s, Timestamp e);
  bool contains(Timestamp t) const { return t >= start && t < end; }
};

struct InteractionEvent {
  UserId ego;
  UserId alter;
  Timestamp ts = 0;
  InteractionKind kind = InteractionKind::Reply;
  std::optional<std::string> text;
  std::optional<double> sentiment;  // precomputed compound score in [-1, 1]

  bool scorable() const { return text.has_value() || sentiment.has_value(); }
  friend bool operator==(const InteractionEvent&, const InteractionEvent&) = default;
};

struct Post {
  PostId id;
  UserId author;
  std::string target;
  Stance stance = Stance::Favor;
  Timestamp ts = 0;
  std::string text;

  friend bool operator==(const Post&, const Post&) = default;
};

struct AuxGraph {
  AuxKind kind = AuxKind::Likes;
  std::vector<std::pair<UserId, UserId>> edges;
};

struct ExternalPrediction {
  Stance label = Stance::Favor;
  double confidence = 0.5;
  friend bool operator==(const ExternalPrediction&, const ExternalPrediction&) = default;
};

using ExternalPredictions = std::map<PostId, ExternalPrediction>;

struct LineDiagnostic {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct InteractionLoad {
  std::vector<InteractionEvent> events;
  std::vector<LineDiagnostic> rejected;
  std::size_t total_lines = 0;  // non-blank lines seen
};

// Ingestion. Malformed input throws Error(Parse) naming the line; I/O failure throws Error(Io).
InteractionLoad load_interactions(const std::filesystem::path& path, const ObservationWindow& window);
InteractionLoad parse_interactions(std::string_view content, const ObservationWindow& window);
std::vector<Post> load_posts(const std::filesystem::path& path);
std::vector<Post> parse_posts(std::string_view content);
AuxGraph load_aux_graph(const std::filesystem::path& path, AuxKind kind);
AuxGraph parse_aux_graph(std::string_view content, AuxKind kind);
ExternalPredictions load_predictions(const std::filesystem::path& path);
ExternalPredictions parse_predictions(std::string_view content);

// Serialization, inverse of the parsers above.
std::string format_interaction(const InteractionEvent& e);
std::string format_interactions(std::span<const InteractionEvent> events);
std::string format_posts(std::span<const Post> posts);
std::string format_aux_graph(const AuxGraph& g);
std::string format_predictions(const ExternalPredictions& p);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

struct ValidationReport {
  std::vector<UserId> coverage_gaps;             // post authors absent from every event
  std::vector<PostId> unknown_prediction_posts;  // predictions for posts not in the corpus
  std::vector<std::pair<AuxKind, UserId>> aux_unseen_users;

  bool empty() const {
    return coverage_gaps.empty() && unknown_prediction_posts.empty() && aux_unseen_users.empty();
  }
  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

ValidationReport validate_corpus(std::span<const InteractionEvent> events, std::span<const Post> posts,
                                 std::span<const AuxGraph> aux_graphs, const ExternalPredictions& predictions);

/// Minimal RFC 4180 reader: returns rows of fields, quoted fields may hold commas, quotes and newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view content);
std::string csv_quote(std::string_view field);

}  // namespace egostance
