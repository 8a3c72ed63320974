#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "egostance/pipeline.hpp"

namespace egostance::cli {

/// Every tunable of every stage, resolved before any work starts.
struct RunConfig {
  GeneratorParams syngen;
  std::optional<Timestamp> window_start;
  std::optional<Timestamp> window_end;
  EnmParams enm;
  SignRule sign;
  std::string lexicon = "builtin";
  EmbedParams embed;
  ClassifierHyper clf;
  ExperimentConfig experiment;
  std::optional<std::uint64_t> seed;  // fans out to syngen, embed and clf seeds when set
  unsigned threads = 1;

  std::optional<ObservationWindow> window() const;
  /// Copies the shared knobs (threads, classifier) into the stage structs and validates them.
  void finalize();
  PipelineParams pipeline() const;
};

struct Param {
  std::string section;
  std::string key;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;

  std::string path() const { return section + "." + key; }
};

const std::vector<Param>& params();
const Param& find_param(std::string_view path);

/// `section.key=value`.
std::pair<std::string, std::string> split_assignment(std::string_view text);
void apply(RunConfig& config, std::string_view path, std::string_view value);

/// Flat sectioned key/value file (INI, or TOML restricted to scalars and flat arrays).
/// Keys before any section belong to [general].
void apply_file(RunConfig& config, const std::filesystem::path& path);

/// The resolved configuration in the same format `apply_file` reads.
std::string describe(const RunConfig& config, const std::vector<std::string>& sections = {});

/// Key listing with defaults for --help.
std::string help_table(const std::vector<std::string>& sections);

}  // namespace egostance::cli
