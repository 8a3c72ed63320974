#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "egostance/corpus.hpp"

namespace egostance {

/// One ego -> alter tie with its contact statistics.
struct Relationship {
  UserId ego;
  UserId alter;
  std::size_t interaction_count = 0;
  Timestamp first_ts = 0;
  Timestamp last_ts = 0;
  double frequency = 0.0;  // interactions per month
};

/// 1-D mean-shift result. Modes are sorted in descending order and `assignment[i]`
/// indexes `modes` for the i-th input value.
struct Clustering {
  std::vector<double> modes;
  std::vector<std::size_t> assignment;
  double bandwidth = 0.0;
};

/// Frequency-layered ego network. Ring 0 holds the most frequently contacted alters;
/// circle i (1-based) is the union of rings 0..i-1.
class EgoNetwork {
 public:
  EgoNetwork() = default;
  EgoNetwork(UserId ego, std::vector<Relationship> relationships, std::vector<std::vector<UserId>> rings);

  const UserId& ego() const { return ego_; }
  const std::vector<Relationship>& relationships() const { return relationships_; }
  const std::vector<std::vector<UserId>>& rings() const { return rings_; }
  std::size_t ring_count() const { return rings_.size(); }
  std::size_t alter_count() const { return relationships_.size(); }

  /// Nested union of the first `i` rings (1-based, clamped to ring_count()).
  std::set<UserId> circle(std::size_t i) const;
  const Relationship* find(const UserId& alter) const;
  /// Ring index of `alter`, or nullopt.
  std::optional<std::size_t> ring_of(const UserId& alter) const;

 private:
  UserId ego_;
  std::vector<Relationship> relationships_;  // sorted by alter id
  std::vector<std::vector<UserId>> rings_;
};

enum class CircleSelector { Full, Inner, Outer };

std::string_view to_string(CircleSelector s);

struct WeightedEdge {
  UserId from;
  UserId to;
  double weight = 1.0;
  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

struct ActivityRule {
  int min_span_months = 6;
  int days_per_post = 3;  // one posting day per this many days of the month
};

/// Active-user filter: the timeline spans at least `min_span_months` calendar months and,
/// in at least half of the months the user appears in, posts on
/// ceil(days_in_month / days_per_post) distinct days. Events must be sorted by timestamp.
bool is_active(std::span<const InteractionEvent> user_events, const ActivityRule& rule = {});

/// One relationship per distinct alter reached through any of `kinds`. Frequency is the
/// interaction count over the months from the ego's first qualifying event to window end
/// (floored at one month).
std::vector<Relationship> contact_frequencies(std::span<const InteractionEvent> events, const UserId& ego,
                                              const std::set<InteractionKind>& kinds,
                                              const ObservationWindow& window);

/// Bandwidth heuristic: mean distance from each value to its ceil(0.3 n)-th nearest
/// neighbour (at least the first). Zero when all values coincide.
double estimate_bandwidth(std::span<const double> values, double quantile = 0.3);

/// Flat-kernel mean shift on the real line.
Clustering mean_shift_1d(std::span<const double> values, std::optional<double> bandwidth = std::nullopt);

/// Rings follow the clustering's descending modes. `clustering.assignment` is indexed like `relationships`.
EgoNetwork build_ego_network(std::vector<Relationship> relationships, const Clustering& clustering);

/// Full: every tie. Inner: alters in rings 1-2. Outer: rings 3 and beyond.
std::vector<WeightedEdge> select_edges(std::span<const EgoNetwork> networks, CircleSelector selector);

struct EnmParams {
  std::set<InteractionKind> kinds{InteractionKind::Reply, InteractionKind::Mention};
  ActivityRule activity;
  std::optional<double> bandwidth;  // per-ego estimate when unset
  unsigned threads = 1;
};

/// Filter active egos, compute their frequencies and cluster them. Output ordered by ego id.
std::vector<EgoNetwork> build_ego_networks(std::span<const InteractionEvent> events, const ObservationWindow& window,
                                           const EnmParams& params);

// ego_networks.jsonl: {"ego":..,"rings":[[alter,..],..],"frequencies":{alter:real},"counts":{alter:int}}
std::string format_ego_network(const EgoNetwork& net);
std::string format_ego_networks(std::span<const EgoNetwork> nets);
std::vector<EgoNetwork> parse_ego_networks(std::string_view content);

}  // namespace egostance
