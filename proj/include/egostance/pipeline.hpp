#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "egostance/embed.hpp"
#include "egostance/enm.hpp"
#include "egostance/harness.hpp"
#include "egostance/senm.hpp"
#include "egostance/syngen.hpp"

namespace egostance {

struct PipelineParams {
  EnmParams enm;
  SignRule sign;
  EmbedParams embed;
  Lexicon lexicon = Lexicon::builtin();
};

/// Everything derived from a dataset on the way to an experiment.
struct PipelineState {
  std::vector<EgoNetwork> networks;
  std::vector<SignedEgoNetwork> signed_networks;
  Artifacts artifacts;
  std::map<std::string, std::vector<UserId>> zero_vector_users;  // per branch
};

/// Distinct branches referenced by the feature sets, in first-use order.
std::vector<std::string> required_branches(std::span<const std::string> feature_sets);

/// Builds ego networks (and signed networks when needed) and embeds every graph branch the
/// feature sets use. Zero-vector coverage is reported against the post authors.
PipelineState prepare_artifacts(const Dataset& dataset, std::span<const std::string> feature_sets,
                                const PipelineParams& params);

}  // namespace egostance
