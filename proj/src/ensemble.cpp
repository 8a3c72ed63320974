#include "egostance/ensemble.hpp"

#include "egostance/error.hpp"

namespace egostance {

FinalPrediction vote(const VoteSlate& slate) {
  if (slate.votes.empty()) throw Error(ErrorKind::Validation, "empty vote slate for post '" + slate.post_id + "'");
  std::set<std::string_view> names;
  std::size_t favor = 0, against = 0;
  double favor_conf = 0.0, against_conf = 0.0;
  for (const auto& v : slate.votes) {
    if (!names.insert(v.feature).second) {
      throw Error(ErrorKind::Validation, "duplicate feature '" + v.feature + "' in slate for '" + slate.post_id + "'");
    }
    if (v.label == Stance::Favor) {
      ++favor;
      favor_conf += v.confidence;
    } else {
      ++against;
      against_conf += v.confidence;
    }
  }

  FinalPrediction out;
  out.post_id = slate.post_id;
  if (favor != against) {
    out.label = favor > against ? Stance::Favor : Stance::Against;
    out.margin = favor > against ? favor - against : against - favor;
    return out;
  }
  out.tie_broken = true;
  // Equal counts, so comparing sums compares means.
  out.label = against_conf > favor_conf ? Stance::Against : Stance::Favor;
  return out;
}

std::vector<FinalPrediction> vote_all(std::span<const VoteSlate> slates, const std::set<std::string>& features) {
  if (features.empty()) throw Error(ErrorKind::Usage, "vote_all: empty feature subset");
  std::vector<FinalPrediction> out;
  out.reserve(slates.size());
  for (const auto& s : slates) {
    VoteSlate restricted{s.post_id, {}};
    for (const auto& v : s.votes) {
      if (features.contains(v.feature)) restricted.votes.push_back(v);
    }
    if (restricted.votes.empty()) {
      throw Error(ErrorKind::Validation, "post '" + s.post_id + "' has no vote from the requested features");
    }
    out.push_back(vote(restricted));
  }
  return out;
}

std::string format_final_predictions(std::span<const FinalPrediction> preds) {
  std::string out = "post_id,label,margin,tie_broken\n";
  for (const auto& p : preds) {
    out += p.post_id + ',' + std::string(to_string(p.label)) + ',' + std::to_string(p.margin) + ',' +
           (p.tie_broken ? "true" : "false") + '\n';
  }
  return out;
}

}  // namespace egostance
