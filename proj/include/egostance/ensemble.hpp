#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include "egostance/corpus.hpp"

namespace egostance {

struct Vote {
  std::string feature;
  Stance label = Stance::Favor;
  double confidence = 0.5;
};

struct VoteSlate {
  PostId post_id;
  std::vector<Vote> votes;
};

struct FinalPrediction {
  PostId post_id;
  Stance label = Stance::Favor;
  std::size_t margin = 0;
  bool tie_broken = false;

  friend bool operator==(const FinalPrediction&, const FinalPrediction&) = default;
};

/// Unweighted majority. A tie goes to the label whose votes carry the higher mean
/// confidence, then to FAVOR.
FinalPrediction vote(const VoteSlate& slate);

/// Votes each slate restricted to `features`; a slate left with no votes is an error.
std::vector<FinalPrediction> vote_all(std::span<const VoteSlate> slates, const std::set<std::string>& features);

// final_predictions.csv: post_id,label,margin,tie_broken
std::string format_final_predictions(std::span<const FinalPrediction> preds);

}  // namespace egostance
