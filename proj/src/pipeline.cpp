#include "egostance/pipeline.hpp"

#include <algorithm>
#include <set>

#include "egostance/error.hpp"

namespace egostance {

std::vector<std::string> required_branches(std::span<const std::string> feature_sets) {
  std::vector<std::string> out;
  for (const auto& name : feature_sets) {
    for (const auto& m : parse_feature_set(name).members) {
      if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
  }
  return out;
}

PipelineState prepare_artifacts(const Dataset& dataset, std::span<const std::string> feature_sets,
                                const PipelineParams& params) {
  const auto branches = required_branches(feature_sets);
  std::vector<Feature> features;
  bool need_text = false;
  for (const auto& b : branches) {
    if (b == kTextFeature) {
      need_text = true;
    } else {
      features.push_back(parse_feature(b));
    }
  }
  const bool need_networks = std::any_of(features.begin(), features.end(), [](Feature f) {
    return f == Feature::EnmFull || f == Feature::EnmInner || f == Feature::EnmOuter || f == Feature::Senm;
  });
  const bool need_signs = std::find(features.begin(), features.end(), Feature::Senm) != features.end();

  PipelineState state;
  if (need_networks) state.networks = build_ego_networks(dataset.events, dataset.window, params.enm);
  if (need_signs) {
    const bool any_scorable = std::any_of(dataset.events.begin(), dataset.events.end(),
                                          [](const InteractionEvent& e) { return e.scorable(); });
    if (!any_scorable) throw Error(ErrorKind::Usage, "signed features need interaction texts or sentiments");
    state.signed_networks = sign_ego_networks(state.networks, dataset.events, params.lexicon, params.sign,
                                              params.enm.kinds, params.enm.threads);
  }
  if (need_text) {
    if (dataset.predictions.empty()) throw Error(ErrorKind::Usage, "feature 'text' needs a predictions file");
    state.artifacts.text_predictions = dataset.predictions;
  }

  std::set<UserId> author_set;
  for (const auto& p : dataset.posts) author_set.insert(p.author);
  const std::vector<UserId> authors(author_set.begin(), author_set.end());

  const FeatureSources sources{state.networks, state.signed_networks, dataset.aux_graphs};
  for (Feature f : features) {
    auto embedded = embed_feature(f, sources, authors, params.embed);
    const std::string name(to_string(f));
    state.zero_vector_users[name] = std::move(embedded.zero_vector_users);
    state.artifacts.embeddings.emplace(name, std::move(embedded.table));
  }
  return state;
}

}  // namespace egostance
