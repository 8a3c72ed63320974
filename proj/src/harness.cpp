#include "egostance/harness.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "egostance/ensemble.hpp"
#include "egostance/error.hpp"
#include "egostance/parallel.hpp"
#include "egostance/rng.hpp"

namespace egostance {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

FeatureSet parse_feature_set(std::string_view name) {
  FeatureSet fs;
  fs.name = std::string(name);
  if (name == kCtTnFeatureSet) {
    fs.members = {kTextFeature, "likes", "followers", "friends"};
    return fs;
  }
  std::size_t pos = 0;
  while (pos <= name.size()) {
    std::size_t plus = name.find('+', pos);
    if (plus == std::string_view::npos) plus = name.size();
    const std::string member(name.substr(pos, plus - pos));
    if (member != kTextFeature) parse_feature(member);  // validates the name
    if (std::find(fs.members.begin(), fs.members.end(), member) != fs.members.end()) {
      throw Error(ErrorKind::Usage, "feature set '" + fs.name + "' repeats '" + member + "'");
    }
    fs.members.push_back(member);
    pos = plus + 1;
  }
  return fs;
}

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::Validation, "experiment: " + m); };
  if (c.source.empty() || c.destination.empty()) fail("source and destination targets are required");
  if (c.source == c.destination) fail("source and destination must differ");
  if (c.shots.empty()) fail("at least one shot size required");
  for (std::size_t i = 1; i < c.shots.size(); ++i) {
    if (c.shots[i] <= c.shots[i - 1]) fail("shots must be strictly increasing");
  }
  if (c.seeds.empty()) fail("at least one seed required");
  if (c.test_min > c.test_max || c.test_max == 0) fail("invalid test size range");
  if (c.feature_sets.empty()) fail("at least one feature set required");
  std::set<std::string> names;
  for (const auto& f : c.feature_sets) {
    parse_feature_set(f);
    if (!names.insert(f).second) fail("duplicate feature set '" + f + "'");
  }
  egostance::validate(c.classifier);
}

Split make_split(std::span<const Post> posts, const ExperimentConfig& config, std::size_t shot, std::uint64_t seed) {
  std::vector<const Post*> source, dest;
  for (const auto& p : posts) {
    if (p.target == config.source) source.push_back(&p);
    if (p.target == config.destination) dest.push_back(&p);
  }
  auto by_id = [](const Post* a, const Post* b) { return a->id < b->id; };
  std::sort(source.begin(), source.end(), by_id);
  std::sort(dest.begin(), dest.end(), by_id);

  if (dest.size() < shot) {
    throw Error(ErrorKind::Validation, "destination '" + config.destination + "' has " + std::to_string(dest.size()) +
                                           " posts, fewer than the " + std::to_string(shot) + "-shot injection");
  }
  const std::size_t max_shot = config.shots.empty() ? shot : std::max(shot, config.shots.back());

  Split split;
  Rng source_rng(derive_seed(seed, fnv1a("source")));
  Rng dest_rng(derive_seed(seed, fnv1a("destination")));
  source_rng.shuffle(source);
  dest_rng.shuffle(dest);

  const std::size_t n_source = std::min(config.source_train_size, source.size());
  if (n_source < config.source_train_size) {
    split.degraded = true;
    split.notes.push_back("only " + std::to_string(n_source) + " source posts available");
  }
  for (std::size_t i = 0; i < n_source; ++i) split.train.push_back(source[i]->id);
  for (std::size_t i = 0; i < shot; ++i) split.train.push_back(dest[i]->id);

  const std::size_t pool_start = std::min(max_shot, dest.size());
  const std::size_t remaining = dest.size() - pool_start;
  const std::size_t n_test = std::min(config.test_max, remaining);
  if (n_test == 0) throw Error(ErrorKind::Validation, "no unseen destination posts left for testing");
  if (n_test < config.test_min) {
    split.degraded = true;
    split.notes.push_back("test set holds " + std::to_string(n_test) + " posts, below the minimum of " +
                          std::to_string(config.test_min));
  }
  for (std::size_t i = 0; i < n_test; ++i) split.test.push_back(dest[pool_start + i]->id);
  return split;
}

MacroF1 macro_f1_detail(std::span<const Stance> predicted, std::span<const Stance> gold) {
  if (predicted.size() != gold.size()) throw Error(ErrorKind::Validation, "macro_f1: prediction/gold size mismatch");
  std::size_t tp[2] = {0, 0}, fp[2] = {0, 0}, fn[2] = {0, 0};
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const int g = gold[i] == Stance::Favor ? 0 : 1;
    const int p = predicted[i] == Stance::Favor ? 0 : 1;
    if (g == p) {
      ++tp[g];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }
  MacroF1 out;
  double f1[2];
  for (int c = 0; c < 2; ++c) {
    const std::size_t denom = 2 * tp[c] + fp[c] + fn[c];
    if (denom == 0) {
      f1[c] = 0.0;
      out.warnings.push_back(std::string("class ") + std::string(to_string(c == 0 ? Stance::Favor : Stance::Against)) +
                             " absent from both gold and predictions; F1 set to 0");
    } else {
      f1[c] = 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
    }
  }
  out.favor = f1[0];
  out.against = f1[1];
  out.value = 0.5 * (f1[0] + f1[1]);
  return out;
}

double macro_f1(std::span<const Stance> predicted, std::span<const Stance> gold) {
  return macro_f1_detail(predicted, gold).value;
}

MacroF1 macro_f1(const std::map<PostId, Stance>& predicted, const std::map<PostId, Stance>& gold) {
  if (predicted.size() != gold.size()) throw Error(ErrorKind::Validation, "macro_f1: post id sets differ");
  std::vector<Stance> p, g;
  auto it = predicted.begin();
  for (const auto& [id, s] : gold) {
    if (it->first != id) throw Error(ErrorKind::Validation, "macro_f1: post id sets differ at '" + id + "'");
    p.push_back(it->second);
    g.push_back(s);
    ++it;
  }
  return macro_f1_detail(p, g);
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::span<const Post> posts,
                                const Artifacts& artifacts) {
  validate(config);
  std::vector<FeatureSet> sets;
  std::vector<std::string> branches;
  for (const auto& name : config.feature_sets) {
    sets.push_back(parse_feature_set(name));
    for (const auto& m : sets.back().members) {
      if (std::find(branches.begin(), branches.end(), m) == branches.end()) branches.push_back(m);
    }
  }
  for (const auto& b : branches) {
    if (b == kTextFeature) {
      if (!artifacts.text_predictions) throw Error(ErrorKind::Usage, "feature 'text' needs external predictions");
    } else if (!artifacts.embeddings.contains(b)) {
      throw Error(ErrorKind::Usage, "no embeddings available for feature '" + b + "'");
    }
  }

  std::unordered_map<std::string_view, const Post*> by_id;
  for (const auto& p : posts) by_id.emplace(p.id, &p);

  ExperimentResult result;
  // Splits depend only on (shot, seed).
  struct SplitKey {
    std::size_t shot_index;
    std::size_t seed_index;
  };
  std::vector<SplitKey> split_keys;
  std::vector<Split> splits;
  for (std::size_t si = 0; si < config.shots.size(); ++si) {
    for (std::size_t ki = 0; ki < config.seeds.size(); ++ki) {
      split_keys.push_back({si, ki});
      splits.push_back(make_split(posts, config, config.shots[si], config.seeds[ki]));
      for (const auto& n : splits.back().notes) {
        result.notes.push_back("shot " + std::to_string(config.shots[si]) + ", seed " +
                               std::to_string(config.seeds[ki]) + ": " + n);
      }
    }
  }

  // One cell per (split, branch); each yields predictions over the split's test ids.
  const std::size_t n_cells = splits.size() * branches.size();
  std::vector<std::vector<Prediction>> cell_preds(n_cells);
  std::vector<CellAudit> audits(n_cells);
  parallel_for(n_cells, config.threads, [&](std::size_t cell) {
    const std::size_t s = cell / branches.size();
    const std::string& branch = branches[cell % branches.size()];
    const Split& split = splits[s];
    const std::size_t shot = config.shots[split_keys[s].shot_index];
    const std::uint64_t seed = config.seeds[split_keys[s].seed_index];
    CellAudit& audit = audits[cell];
    audit.feature = branch;
    audit.shot = shot;
    audit.seed = seed;
    audit.tested_on = split.test;
    auto& preds = cell_preds[cell];
    try {
      if (branch == kTextFeature) {
        for (const auto& id : split.test) {
          const auto it = artifacts.text_predictions->find(id);
          if (it == artifacts.text_predictions->end()) {
            throw Error(ErrorKind::Validation, "no text prediction for test post '" + id + "'");
          }
          preds.push_back({it->second.label, it->second.confidence});
        }
        return;
      }
      const EmbeddingTable& table = artifacts.embeddings.at(branch);
      std::vector<LabeledVector> train;
      train.reserve(split.train.size());
      for (const auto& id : split.train) {
        const Post* p = by_id.at(id);
        train.push_back({table.vector_or_zero(p->author), p->stance});
        audit.trained_on.push_back(id);
      }
      ClassifierHyper hyper = config.classifier;
      hyper.seed = derive_seed(seed, shot, fnv1a(branch) ^ config.classifier.seed);
      const Model model = egostance::train(train, hyper);
      for (const auto& id : split.test) preds.push_back(predict(model, table.vector_or_zero(by_id.at(id)->author)));
    } catch (const Error& e) {
      throw Error(e.kind(), "feature " + branch + ", shot " + std::to_string(shot) + ", seed " +
                                std::to_string(seed) + ": " + e.what());
    }
  });

  for (const auto& fs : sets) {
    for (std::size_t si = 0; si < config.shots.size(); ++si) {
      double sum = 0.0;
      for (std::size_t ki = 0; ki < config.seeds.size(); ++ki) {
        const std::size_t s = si * config.seeds.size() + ki;
        const Split& split = splits[s];
        std::vector<VoteSlate> slates(split.test.size());
        for (std::size_t t = 0; t < split.test.size(); ++t) slates[t].post_id = split.test[t];
        for (const auto& member : fs.members) {
          const std::size_t b = static_cast<std::size_t>(std::find(branches.begin(), branches.end(), member) - branches.begin());
          const auto& preds = cell_preds[s * branches.size() + b];
          for (std::size_t t = 0; t < split.test.size(); ++t) {
            slates[t].votes.push_back({member, preds[t].label, preds[t].confidence});
          }
        }
        const std::set<std::string> members(fs.members.begin(), fs.members.end());
        const auto finals = vote_all(slates, members);
        std::vector<Stance> predicted, gold;
        for (std::size_t t = 0; t < finals.size(); ++t) {
          predicted.push_back(finals[t].label);
          gold.push_back(by_id.at(split.test[t])->stance);
        }
        const MacroF1 f1 = macro_f1_detail(predicted, gold);
        for (const auto& w : f1.warnings) result.notes.push_back(fs.name + ": " + w);
        result.rows.push_back({config.source, config.destination, fs.name, config.shots[si], config.seeds[ki], f1.value});
        sum += f1.value;
      }
      result.rows.push_back({config.source, config.destination, fs.name, config.shots[si], std::nullopt,
                             sum / static_cast<double>(config.seeds.size())});
    }
  }
  result.audits = std::move(audits);
  return result;
}

// ---------------------------------------------------------------------------
// report.csv and plots
// ---------------------------------------------------------------------------

std::string format_report(std::span<const ReportRow> rows) {
  std::string out = "source,destination,features,shot,seed,macro_f1\n";
  for (const auto& r : rows) {
    out += r.source + ',' + r.destination + ',' + r.features + ',' + std::to_string(r.shot) + ',' +
           (r.seed ? std::to_string(*r.seed) : std::string("mean")) + ',' + format_real(r.macro_f1) + '\n';
  }
  return out;
}

std::vector<ReportRow> parse_report(std::string_view content) {
  const auto rows = parse_csv(content);
  if (rows.empty() || rows.front() != std::vector<std::string>{"source", "destination", "features", "shot", "seed",
                                                                 "macro_f1"}) {
    throw Error(ErrorKind::Parse, "report.csv: unexpected header");
  }
  std::vector<ReportRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != 6) throw Error(ErrorKind::Parse, "report.csv row " + std::to_string(i + 1) + ": expected 6 fields");
    try {
      ReportRow r;
      r.source = f[0];
      r.destination = f[1];
      r.features = f[2];
      r.shot = std::stoul(f[3]);
      if (f[4] != "mean") r.seed = std::stoull(f[4]);
      r.macro_f1 = std::stod(f[5]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::Parse, "report.csv row " + std::to_string(i + 1) + ": bad number");
    }
  }
  return out;
}

std::string render_plot_svg(std::span<const ReportRow> rows, const std::string& source,
                            const std::string& destination) {
  constexpr double W = 640, H = 420, left = 60, right = 170, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  std::vector<std::string> series;
  std::map<std::string, std::vector<std::pair<std::size_t, double>>> points;
  std::set<std::size_t> shots;
  for (const auto& r : rows) {
    if (r.seed || r.source != source || r.destination != destination) continue;
    if (!points.contains(r.features)) series.push_back(r.features);
    points[r.features].emplace_back(r.shot, r.macro_f1);
    shots.insert(r.shot);
  }
  const double xmin = shots.empty() ? 0.0 : static_cast<double>(*shots.begin());
  const double xmax = shots.empty() ? 1.0 : static_cast<double>(*shots.rbegin());
  auto sx = [&](double x) { return left + (xmax > xmin ? (x - xmin) / (xmax - xmin) : 0.5) * pw; };
  auto sy = [&](double y) { return top + (1.0 - y) * ph; };

  std::ostringstream svg;
  svg.precision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << source << " -> "
      << destination << "</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 10; k += 2) {
    const double y = k / 10.0;
    svg << "<line x1=\"" << left - 4 << "\" y1=\"" << sy(y) << "\" x2=\"" << left + pw << "\" y2=\"" << sy(y)
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">" << y << "</text>\n";
  }
  for (std::size_t s : shots) {
    svg << "<text x=\"" << sx(static_cast<double>(s)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
        << s << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">shot</text>\n";
  svg << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << top + ph / 2 << ")\">mean macro-F1</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    auto pts = points[series[i]];
    std::sort(pts.begin(), pts.end());
    svg << "<polyline class=\"series\" data-features=\"" << series[i] << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < pts.size(); ++k) {
      svg << (k ? " " : "") << sx(static_cast<double>(pts[k].first)) << ',' << sy(pts[k].second);
    }
    svg << "\"/>\n";
    const double ly = top + 14 + 18 * static_cast<double>(i);
    svg << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 36 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4 << "\">" << series[i] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::filesystem::path> emit_report(std::span<const ReportRow> rows, const std::filesystem::path& dir) {
  if (rows.empty()) throw Error(ErrorKind::Validation, "emit_report: no rows");
  std::vector<std::filesystem::path> written;
  write_file(dir / "report.csv", format_report(rows));
  written.push_back(dir / "report.csv");
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& r : rows) pairs.emplace(r.source, r.destination);
  for (const auto& [src, dst] : pairs) {
    const auto path = dir / ("plot_" + src + "_" + dst + ".svg");
    write_file(path, render_plot_svg(rows, src, dst));
    written.push_back(path);
  }
  return written;
}

}  // namespace egostance
