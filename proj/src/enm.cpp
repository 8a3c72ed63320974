#include "egostance/enm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "egostance/calendar.hpp"
#include "egostance/error.hpp"
#include "egostance/parallel.hpp"

namespace egostance {

namespace {

constexpr int kMaxShiftIterations = 300;
constexpr double kConvergenceFactor = 1e-4;  // times bandwidth
constexpr double kMergeFactor = 0.5;         // times bandwidth

bool is_active_sorted(std::span<const Timestamp> stamps, const ActivityRule& rule) {
  if (stamps.empty()) return false;
  if (calendar::add_months(stamps.front(), rule.min_span_months) > stamps.back()) return false;

  std::map<int, std::set<std::int64_t>> days_by_month;
  for (Timestamp ts : stamps) days_by_month[calendar::month_index(ts)].insert(calendar::day_index(ts));

  std::size_t dense = 0;
  for (const auto& [month, days] : days_by_month) {
    const unsigned dim = calendar::days_in_month(month);
    const unsigned need = (dim + rule.days_per_post - 1) / rule.days_per_post;
    if (days.size() >= need) ++dense;
  }
  return 2 * dense >= days_by_month.size();
}

std::vector<Relationship> frequencies_from(std::span<const InteractionEvent* const> ego_events, const UserId& ego,
                                           const std::set<InteractionKind>& kinds, const ObservationWindow& window) {
  std::map<std::string_view, Relationship> by_alter;
  Timestamp first = window.end;
  for (const InteractionEvent* e : ego_events) {
    if (e->ego != ego || !kinds.contains(e->kind) || !window.contains(e->ts)) continue;
    first = std::min(first, e->ts);
    auto [it, inserted] = by_alter.try_emplace(e->alter);
    Relationship& r = it->second;
    if (inserted) {
      r.ego = ego;
      r.alter = e->alter;
      r.first_ts = r.last_ts = e->ts;
    }
    ++r.interaction_count;
    r.first_ts = std::min(r.first_ts, e->ts);
    r.last_ts = std::max(r.last_ts, e->ts);
  }
  if (by_alter.empty()) return {};
  const double months = std::max(1.0, static_cast<double>(window.end - first) / calendar::kSecondsPerMonth);
  std::vector<Relationship> out;
  out.reserve(by_alter.size());
  for (auto& [_, r] : by_alter) {
    r.frequency = static_cast<double>(r.interaction_count) / months;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

std::string_view to_string(CircleSelector s) {
  switch (s) {
    case CircleSelector::Full: return "full";
    case CircleSelector::Inner: return "inner";
    case CircleSelector::Outer: return "outer";
  }
  return "full";
}

EgoNetwork::EgoNetwork(UserId ego, std::vector<Relationship> relationships, std::vector<std::vector<UserId>> rings)
    : ego_(std::move(ego)), relationships_(std::move(relationships)), rings_(std::move(rings)) {
  std::sort(relationships_.begin(), relationships_.end(),
            [](const Relationship& a, const Relationship& b) { return a.alter < b.alter; });
  std::size_t in_rings = 0;
  for (const auto& ring : rings_) {
    if (ring.empty()) throw Error(ErrorKind::Validation, "ego " + ego_ + ": empty ring");
    for (const auto& a : ring) {
      if (!find(a)) throw Error(ErrorKind::Validation, "ego " + ego_ + ": ring member '" + a + "' has no relationship");
    }
    in_rings += ring.size();
  }
  if (in_rings != relationships_.size()) {
    throw Error(ErrorKind::Validation, "ego " + ego_ + ": rings do not partition the alter set");
  }
}

std::set<UserId> EgoNetwork::circle(std::size_t i) const {
  std::set<UserId> out;
  for (std::size_t r = 0; r < std::min(i, rings_.size()); ++r) out.insert(rings_[r].begin(), rings_[r].end());
  return out;
}

const Relationship* EgoNetwork::find(const UserId& alter) const {
  auto it = std::lower_bound(relationships_.begin(), relationships_.end(), alter,
                             [](const Relationship& r, const UserId& a) { return r.alter < a; });
  return (it != relationships_.end() && it->alter == alter) ? &*it : nullptr;
}

std::optional<std::size_t> EgoNetwork::ring_of(const UserId& alter) const {
  for (std::size_t r = 0; r < rings_.size(); ++r) {
    if (std::find(rings_[r].begin(), rings_[r].end(), alter) != rings_[r].end()) return r;
  }
  return std::nullopt;
}

bool is_active(std::span<const InteractionEvent> user_events, const ActivityRule& rule) {
  std::vector<Timestamp> stamps;
  stamps.reserve(user_events.size());
  for (const auto& e : user_events) stamps.push_back(e.ts);
  std::sort(stamps.begin(), stamps.end());
  return is_active_sorted(stamps, rule);
}

std::vector<Relationship> contact_frequencies(std::span<const InteractionEvent> events, const UserId& ego,
                                              const std::set<InteractionKind>& kinds,
                                              const ObservationWindow& window) {
  std::vector<const InteractionEvent*> ptrs;
  for (const auto& e : events) {
    if (e.ego == ego) ptrs.push_back(&e);
  }
  return frequencies_from(ptrs, ego, kinds, window);
}

double estimate_bandwidth(std::span<const double> values, double quantile) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(n))),
                                                1, n - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // k-th nearest neighbour by merging the left and right runs outward from i.
    std::size_t left = i, right = i + 1;
    double kth = 0.0;
    for (std::size_t taken = 0; taken < k; ++taken) {
      const double dl = left > 0 ? sorted[i] - sorted[left - 1] : INFINITY;
      const double dr = right < n ? sorted[right] - sorted[i] : INFINITY;
      if (dl <= dr) {
        kth = dl;
        --left;
      } else {
        kth = dr;
        ++right;
      }
    }
    total += kth;
  }
  return total / static_cast<double>(n);
}

Clustering mean_shift_1d(std::span<const double> values, std::optional<double> bandwidth) {
  if (values.empty()) throw Error(ErrorKind::Validation, "mean_shift_1d: no values");
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::Validation, "mean_shift_1d: values must be finite and > 0");
  }
  if (bandwidth && !(*bandwidth > 0.0)) throw Error(ErrorKind::Validation, "mean_shift_1d: bandwidth must be > 0");

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double bw = bandwidth ? *bandwidth : estimate_bandwidth(sorted);
  if (!(bw > 0.0)) bw = std::max(sorted.back() * 1e-6, 1e-12);  // all values coincide

  auto window = [&](double x) {
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), x - bw) - sorted.begin();
    const auto hi = std::upper_bound(sorted.begin(), sorted.end(), x + bw) - sorted.begin();
    return std::pair<std::size_t, std::size_t>(lo, hi);
  };

  struct Peak {
    double position;
    std::size_t support;
  };
  std::vector<Peak> peaks;
  const double tolerance = kConvergenceFactor * bw;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0 && sorted[i] == sorted[i - 1]) continue;  // identical seeds converge identically
    double x = sorted[i];
    for (int it = 0; it < kMaxShiftIterations; ++it) {
      const auto [lo, hi] = window(x);
      const double next = std::accumulate(sorted.begin() + lo, sorted.begin() + hi, 0.0) / static_cast<double>(hi - lo);
      const double shift = std::abs(next - x);
      x = next;
      if (shift < tolerance) break;
    }
    const auto [lo, hi] = window(x);
    peaks.push_back({x, hi - lo});
  }

  // Strongest peaks claim a mode first; weaker ones within the merge radius fold into it.
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    return a.support != b.support ? a.support > b.support : a.position > b.position;
  });
  std::vector<double> modes;
  for (const Peak& p : peaks) {
    const bool near = std::any_of(modes.begin(), modes.end(),
                                  [&](double m) { return std::abs(m - p.position) <= kMergeFactor * bw; });
    if (!near) modes.push_back(p.position);
  }
  std::sort(modes.begin(), modes.end(), std::greater<>());

  auto nearest = [&](double v) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < modes.size(); ++m) {
      if (std::abs(v - modes[m]) < std::abs(v - modes[best])) best = m;
    }
    return best;
  };

  Clustering out;
  out.bandwidth = bw;
  std::vector<std::size_t> raw(values.size());
  std::vector<std::size_t> used(modes.size(), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    raw[i] = nearest(values[i]);
    ++used[raw[i]];
  }
  std::vector<std::size_t> remap(modes.size());
  for (std::size_t m = 0; m < modes.size(); ++m) {
    if (used[m] == 0) continue;
    remap[m] = out.modes.size();
    out.modes.push_back(modes[m]);
  }
  out.assignment.reserve(values.size());
  for (std::size_t r : raw) out.assignment.push_back(remap[r]);
  return out;
}

EgoNetwork build_ego_network(std::vector<Relationship> relationships, const Clustering& clustering) {
  if (relationships.empty()) throw Error(ErrorKind::Validation, "build_ego_network: no relationships");
  if (clustering.assignment.size() != relationships.size()) {
    throw Error(ErrorKind::Validation, "build_ego_network: clustering does not cover the relationship alters");
  }
  const UserId ego = relationships.front().ego;
  std::vector<std::vector<std::size_t>> members(clustering.modes.size());
  for (std::size_t i = 0; i < relationships.size(); ++i) {
    const std::size_t c = clustering.assignment[i];
    if (c >= members.size()) throw Error(ErrorKind::Validation, "build_ego_network: assignment out of range");
    if (relationships[i].ego != ego) throw Error(ErrorKind::Validation, "build_ego_network: mixed egos");
    members[c].push_back(i);
  }
  std::vector<std::vector<UserId>> rings;
  for (auto& idx : members) {
    if (idx.empty()) continue;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const auto& ra = relationships[a];
      const auto& rb = relationships[b];
      return ra.frequency != rb.frequency ? ra.frequency > rb.frequency : ra.alter < rb.alter;
    });
    auto& ring = rings.emplace_back();
    for (std::size_t i : idx) ring.push_back(relationships[i].alter);
  }
  return EgoNetwork(ego, std::move(relationships), std::move(rings));
}

std::vector<WeightedEdge> select_edges(std::span<const EgoNetwork> networks, CircleSelector selector) {
  std::vector<WeightedEdge> out;
  for (const auto& net : networks) {
    const auto& rings = net.rings();
    std::size_t lo = 0, hi = rings.size();
    if (selector == CircleSelector::Inner) hi = std::min<std::size_t>(2, rings.size());
    if (selector == CircleSelector::Outer) lo = std::min<std::size_t>(2, rings.size());
    for (std::size_t r = lo; r < hi; ++r) {
      for (const auto& alter : rings[r]) out.push_back({net.ego(), alter, net.find(alter)->frequency});
    }
  }
  return out;
}

std::vector<EgoNetwork> build_ego_networks(std::span<const InteractionEvent> events, const ObservationWindow& window,
                                           const EnmParams& params) {
  std::map<std::string_view, std::vector<const InteractionEvent*>> by_ego;
  for (const auto& e : events) by_ego[e.ego].push_back(&e);
  std::vector<std::pair<std::string_view, std::vector<const InteractionEvent*>>> groups(
      std::make_move_iterator(by_ego.begin()), std::make_move_iterator(by_ego.end()));

  std::vector<std::optional<EgoNetwork>> built(groups.size());
  parallel_for(groups.size(), params.threads, [&](std::size_t g) {
    auto& [ego, evs] = groups[g];
    std::vector<Timestamp> stamps;
    stamps.reserve(evs.size());
    for (const auto* e : evs) stamps.push_back(e->ts);
    std::sort(stamps.begin(), stamps.end());
    if (!is_active_sorted(stamps, params.activity)) return;
    auto rels = frequencies_from(evs, UserId(ego), params.kinds, window);
    if (rels.empty()) return;
    std::vector<double> freqs;
    freqs.reserve(rels.size());
    for (const auto& r : rels) freqs.push_back(r.frequency);
    const Clustering c = mean_shift_1d(freqs, params.bandwidth);
    built[g] = build_ego_network(std::move(rels), c);
  });

  std::vector<EgoNetwork> out;
  for (auto& b : built) {
    if (b) out.push_back(std::move(*b));
  }
  return out;
}

std::string format_ego_network(const EgoNetwork& net) {
  nlohmann::ordered_json obj;
  obj["ego"] = net.ego();
  obj["rings"] = net.rings();
  nlohmann::ordered_json freqs = nlohmann::ordered_json::object();
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (const auto& r : net.relationships()) {
    freqs[r.alter] = r.frequency;
    counts[r.alter] = r.interaction_count;
  }
  obj["frequencies"] = std::move(freqs);
  obj["counts"] = std::move(counts);
  return obj.dump();
}

std::string format_ego_networks(std::span<const EgoNetwork> nets) {
  std::string out;
  for (const auto& n : nets) {
    out += format_ego_network(n);
    out += '\n';
  }
  return out;
}

std::vector<EgoNetwork> parse_ego_networks(std::string_view content) {
  std::vector<EgoNetwork> out;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    const std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      const auto ego = obj.at("ego").get<UserId>();
      const auto rings = obj.at("rings").get<std::vector<std::vector<UserId>>>();
      const auto& freqs = obj.at("frequencies");
      const nlohmann::json* counts = obj.contains("counts") ? &obj.at("counts") : nullptr;
      std::vector<Relationship> rels;
      for (const auto& ring : rings) {
        for (const auto& alter : ring) {
          Relationship r;
          r.ego = ego;
          r.alter = alter;
          r.frequency = freqs.at(alter).get<double>();
          r.interaction_count = counts ? counts->at(alter).get<std::size_t>() : 1;
          rels.push_back(std::move(r));
        }
      }
      out.emplace_back(ego, std::move(rels), rings);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, "ego network line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace egostance
