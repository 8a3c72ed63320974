#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "egostance/clf.hpp"
#include "egostance/corpus.hpp"
#include "egostance/embed.hpp"

namespace egostance {

/// Name of the branch fed by externally computed text predictions.
inline constexpr const char* kTextFeature = "text";
/// Composite of the text branch and the three auxiliary-graph branches.
inline constexpr const char* kCtTnFeatureSet = "ct-tn";

/// A voting group: one branch, "ct-tn", or branches joined with '+'.
struct FeatureSet {
  std::string name;
  std::vector<std::string> members;
};

FeatureSet parse_feature_set(std::string_view name);

struct ExperimentConfig {
  std::string source;
  std::string destination;
  std::vector<std::size_t> shots{100, 200, 300, 400};
  std::vector<std::uint64_t> seeds{24, 524, 1024, 1524, 2024};
  std::size_t source_train_size = 1000;
  std::size_t test_min = 500;
  std::size_t test_max = 800;
  std::vector<std::string> feature_sets{"enm-full"};
  ClassifierHyper classifier;
  unsigned threads = 1;
};

void validate(const ExperimentConfig& config);

struct Split {
  std::vector<PostId> train;  // source sample followed by the destination injection
  std::vector<PostId> test;   // destination only
  bool degraded = false;      // fewer source posts or test posts than requested
  std::vector<std::string> notes;
};

/// Per seed, the source sample and a destination permutation are fixed; the injection for a
/// shot is a prefix of that permutation and the test pool starts after the largest shot, so
/// injections nest across shots and every shot shares one test set.
Split make_split(std::span<const Post> posts, const ExperimentConfig& config, std::size_t shot, std::uint64_t seed);

struct MacroF1 {
  double value = 0.0;
  double favor = 0.0;
  double against = 0.0;
  std::vector<std::string> warnings;
};

/// Mean of per-class F1; a class absent from both sides scores 0 and adds a warning.
MacroF1 macro_f1_detail(std::span<const Stance> predicted, std::span<const Stance> gold);
double macro_f1(std::span<const Stance> predicted, std::span<const Stance> gold);
/// Keyed form; both sides must hold exactly the same post ids.
MacroF1 macro_f1(const std::map<PostId, Stance>& predicted, const std::map<PostId, Stance>& gold);

struct ReportRow {
  std::string source;
  std::string destination;
  std::string features;
  std::size_t shot = 0;
  std::optional<std::uint64_t> seed;  // nullopt: mean over seeds
  double macro_f1 = 0.0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// Per-branch inputs: embedding tables for graph branches, predictions for the text branch.
struct Artifacts {
  std::map<std::string, EmbeddingTable> embeddings;
  std::optional<ExternalPredictions> text_predictions;
};

struct CellAudit {
  std::string feature;
  std::size_t shot = 0;
  std::uint64_t seed = 0;
  std::vector<PostId> trained_on;  // ids actually fed to the classifier (empty for the text branch)
  std::vector<PostId> tested_on;
};

struct ExperimentResult {
  std::vector<ReportRow> rows;
  std::vector<CellAudit> audits;
  std::vector<std::string> notes;
};

/// Rows ordered by feature set, then shot, then seeds in config order followed by the mean.
ExperimentResult run_experiment(const ExperimentConfig& config, std::span<const Post> posts,
                                const Artifacts& artifacts);

std::string format_report(std::span<const ReportRow> rows);
std::vector<ReportRow> parse_report(std::string_view content);
/// Line plot of mean macro-F1 against shot, one polyline per feature set.
std::string render_plot_svg(std::span<const ReportRow> rows, const std::string& source, const std::string& destination);
/// report.csv plus plot_<source>_<destination>.svg per target pair.
std::vector<std::filesystem::path> emit_report(std::span<const ReportRow> rows, const std::filesystem::path& dir);

}  // namespace egostance
