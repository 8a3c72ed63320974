#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "egostance/corpus.hpp"
#include "egostance/senm.hpp"

namespace egostance {

struct GeneratorParams {
  std::size_t n_users = 500;
  std::vector<std::string> targets{"A", "B"};
  double stance_correlation = 0.9;  // P(stance on a later target agrees with the first)
  double homophily = 0.8;           // P(a tie joins same-stance users)
  std::vector<std::size_t> circle_sizes{2, 5, 15, 50, 150};
  double negative_rate_cross = 0.3;
  double negative_rate_same = 0.05;
  double posts_per_user = 6.0;      // Poisson mean, per user and target
  std::size_t posts_per_target = 0;  // when > 0: exactly this many posts per target, random authors
  int months = 12;
  Timestamp start_ts = 1577836800;  // 2020-01-01T00:00:00Z
  double top_rate = 8.0;            // interactions per month with innermost alters
  double ring_decay = 3.0;          // rate ratio between consecutive rings
  double rate_jitter = 0.25;        // log-normal sigma on per-alter rates
  double inactive_fraction = 0.05;  // users whose timeline stops after a few months
  std::size_t aux_degree = 20;
  double text_accuracy = 0.7;       // accuracy of the simulated text-model predictions
  bool event_text = true;           // texts when true, precomputed sentiments otherwise
  std::uint64_t seed = 1;
};

/// Throws Error(Validation) describing the first violated constraint.
void validate(const GeneratorParams& params);

struct GroundTruth {
  std::map<std::pair<UserId, std::string>, Stance> stance_of;
  std::map<std::pair<UserId, UserId>, Sign> sign_of;
};

struct Dataset {
  ObservationWindow window;
  std::vector<InteractionEvent> events;
  std::vector<Post> posts;
  std::vector<AuxGraph> aux_graphs;
  ExternalPredictions predictions;
  std::optional<GroundTruth> truth;
};

Dataset generate(const GeneratorParams& params);

namespace files {
inline constexpr const char* kInteractions = "interactions.jsonl";
inline constexpr const char* kPosts = "posts.csv";
inline constexpr const char* kPredictions = "predictions.csv";
inline constexpr const char* kGroundTruth = "ground_truth.json";
std::string aux_graph(AuxKind kind);  // "<kind>.txt"
}  // namespace files

/// Writes the corpus files and ground_truth.json into `dir`; returns the paths written.
std::vector<std::filesystem::path> emit(const Dataset& dataset, const std::filesystem::path& dir);

std::string format_ground_truth(const GroundTruth& truth, const ObservationWindow& window);
std::pair<GroundTruth, std::optional<ObservationWindow>> parse_ground_truth(std::string_view content);

/// Reads whatever standard files exist in `dir`. The window comes from ground_truth.json when
/// present, else `window`, else spans the interaction timestamps.
Dataset load_dataset(const std::filesystem::path& dir, std::optional<ObservationWindow> window = std::nullopt);

}  // namespace egostance
