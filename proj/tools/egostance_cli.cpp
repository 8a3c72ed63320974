#include <algorithm>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "egostance/ensemble.hpp"
#include "egostance/error.hpp"
#include "egostance/pipeline.hpp"
#include "run_config.hpp"

using namespace egostance;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;  // applied after the file, in order
};

Invocation inv;

void key_option(CLI::App* sub, const std::string& flag, const std::string& path) {
  const auto& p = cli::find_param(path);
  sub->add_option_function<std::string>(
         flag, [path](const std::string& v) { inv.overrides.emplace_back(path, v); }, p.help + " (" + path + ")")
      ->default_str(p.get(cli::RunConfig{}))
      ->type_name("VALUE");
}

CLI::App* subcommand(CLI::App& app, const std::string& name, const std::string& description,
                     const std::vector<std::string>& sections) {
  CLI::App* sub = app.add_subcommand(name, description);
  sub->add_option("--config", inv.config_file, "sectioned key/value config file; flags override it");
  sub->add_option_function<std::vector<std::string>>(
         "--set",
         [](const std::vector<std::string>& vs) {
           for (const auto& v : vs) inv.overrides.push_back(cli::split_assignment(v));
         },
         "override any config key: section.key=value")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->allow_extra_args();
  key_option(sub, "--threads", "general.threads");
  key_option(sub, "--seed", "general.seed");
  std::vector<std::string> shown{"general"};
  shown.insert(shown.end(), sections.begin(), sections.end());
  sub->footer(cli::help_table(shown));
  return sub;
}

CLI::Option* path_option(CLI::App* sub, const std::string& flag, std::string& target, const std::string& help,
                         bool required = true) {
  auto* opt = sub->add_option(flag, target, help);
  if (required) opt->required();
  return opt;
}

cli::RunConfig resolve(const std::string& name, const std::vector<std::pair<std::string, const std::string*>>& paths,
                       const std::vector<std::string>& sections) {
  cli::RunConfig config;
  if (!inv.config_file.empty()) cli::apply_file(config, inv.config_file);
  for (const auto& [key, value] : inv.overrides) cli::apply(config, key, value);
  config.finalize();
  std::cerr << "# egostance " << name << "\n";
  if (!inv.config_file.empty()) std::cerr << "# config file: " << inv.config_file << "\n";
  std::cerr << "[paths]\n";
  for (const auto& [key, value] : paths) std::cerr << key << " = " << *value << "\n";
  std::vector<std::string> shown{"general"};
  shown.insert(shown.end(), sections.begin(), sections.end());
  std::cerr << "\n" << cli::describe(config, shown) << std::endl;
  return config;
}

std::set<std::string> target_filter(const std::string& list) {
  std::set<std::string> out;
  std::stringstream ss(list);
  for (std::string t; std::getline(ss, t, ',');) {
    if (!t.empty()) out.insert(t);
  }
  return out;
}

std::vector<Post> posts_for(const std::string& path, const std::string& targets) {
  auto posts = load_posts(path);
  const auto keep = target_filter(targets);
  if (keep.empty()) return posts;
  std::erase_if(posts, [&](const Post& p) { return !keep.contains(p.target); });
  if (posts.empty()) throw Error(ErrorKind::Validation, "no posts for targets '" + targets + "'");
  return posts;
}

std::vector<UserId> authors_of(std::span<const Post> posts) {
  std::set<UserId> s;
  for (const auto& p : posts) s.insert(p.author);
  return {s.begin(), s.end()};
}

std::vector<std::pair<std::string, std::string>> target_pairs(std::span<const Post> posts, const ExperimentConfig& c) {
  if (!c.source.empty() || !c.destination.empty()) {
    if (c.source.empty() || c.destination.empty()) {
      throw Error(ErrorKind::Usage, "experiment.source and experiment.destination go together");
    }
    return {{c.source, c.destination}};
  }
  std::set<std::string> targets;
  for (const auto& p : posts) targets.insert(p.target);
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& a : targets) {
    for (const auto& b : targets) {
      if (a != b) out.emplace_back(a, b);
    }
  }
  if (out.empty()) throw Error(ErrorKind::Validation, "the posts mention fewer than two targets");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-target stance detection from (signed) ego networks.", "egostance"};
  app.require_subcommand(1);
  app.footer("Run 'egostance <subcommand> --help' for flags, config keys and their defaults.");

  std::string out, data, networks, signed_path, feature, posts_path, embeddings, model_path, targets, input;
  std::vector<std::string> vote_inputs, vote_features, precomputed;

  const std::vector<std::string> syngen_sections{"syngen"};
  auto* syngen = subcommand(app, "syngen", "write a synthetic corpus", syngen_sections);
  path_option(syngen, "--out", out, "output directory");
  key_option(syngen, "--users", "syngen.users");
  key_option(syngen, "--targets", "syngen.targets");
  key_option(syngen, "--homophily", "syngen.homophily");
  key_option(syngen, "--stance-correlation", "syngen.stance_correlation");
  key_option(syngen, "--posts-per-target", "syngen.posts_per_target");
  key_option(syngen, "--months", "syngen.months");

  const std::vector<std::string> enm_sections{"data", "enm"};
  auto* build_enm = subcommand(app, "build-enm", "cluster contact frequencies into ego networks", enm_sections);
  path_option(build_enm, "--data", data, "corpus directory");
  path_option(build_enm, "--out", out, "ego_networks.jsonl to write");
  key_option(build_enm, "--kinds", "enm.kinds");
  key_option(build_enm, "--bandwidth", "enm.bandwidth");

  const std::vector<std::string> sign_sections{"data", "enm", "senm"};
  auto* sign = subcommand(app, "sign", "sign ego-network ties from interaction sentiment", sign_sections);
  path_option(sign, "--data", data, "corpus directory");
  path_option(sign, "--networks", networks, "ego_networks.jsonl");
  path_option(sign, "--out", out, "signed_networks.jsonl to write");
  key_option(sign, "--lexicon", "senm.lexicon");
  key_option(sign, "--negative-ratio", "senm.negative_ratio");

  const std::vector<std::string> embed_sections{"data", "embed"};
  auto* embed = subcommand(app, "embed", "node2vec embedding of one feature graph", embed_sections);
  path_option(embed, "--feature", feature, "enm-full, enm-inner, enm-outer, senm, likes, followers or friends");
  path_option(embed, "--data", data, "corpus directory (post authors, auxiliary graphs)");
  path_option(embed, "--networks", networks, "ego_networks.jsonl (enm features)", false);
  path_option(embed, "--signed", signed_path, "signed_networks.jsonl (senm)", false);
  path_option(embed, "--out", out, "embeddings.tsv to write");
  key_option(embed, "--dimension", "embed.dimension");
  key_option(embed, "--p", "embed.p");
  key_option(embed, "--q", "embed.q");

  const std::vector<std::string> clf_sections{"clf"};
  auto* train_cmd = subcommand(app, "train", "fit the stance classifier on author embeddings", clf_sections);
  path_option(train_cmd, "--posts", posts_path, "posts.csv");
  path_option(train_cmd, "--embeddings", embeddings, "embeddings.tsv");
  path_option(train_cmd, "--targets", targets, "comma-separated targets to train on (default: all)", false);
  path_option(train_cmd, "--out", out, "model.json to write");
  key_option(train_cmd, "--epochs", "clf.epochs");
  key_option(train_cmd, "--batch-size", "clf.batch_size");
  key_option(train_cmd, "--dropout", "clf.dropout");

  auto* predict_cmd = subcommand(app, "predict", "label posts with a trained model", {});
  path_option(predict_cmd, "--model", model_path, "model.json");
  path_option(predict_cmd, "--posts", posts_path, "posts.csv");
  path_option(predict_cmd, "--embeddings", embeddings, "embeddings.tsv used in training");
  path_option(predict_cmd, "--targets", targets, "comma-separated targets to label (default: all)", false);
  path_option(predict_cmd, "--out", out, "predictions.csv to write");

  auto* vote_cmd = subcommand(app, "vote", "majority vote over per-feature predictions", {});
  vote_cmd->add_option("--input", vote_inputs, "feature=predictions.csv, repeatable")->required();
  vote_cmd->add_option("--features", vote_features, "subset of input features to vote with (default: all)")
      ->delimiter(',');
  path_option(vote_cmd, "--out", out, "final_predictions.csv to write");

  const std::vector<std::string> exp_sections{"data", "enm", "senm", "embed", "clf", "experiment"};
  auto* experiment = subcommand(app, "experiment", "few-shot cross-target experiment", exp_sections);
  path_option(experiment, "--data", data, "corpus directory");
  path_option(experiment, "--out", out, "output directory for report.csv and plots");
  experiment->add_option("--embeddings", precomputed, "feature=embeddings.tsv to reuse instead of embedding, repeatable");
  key_option(experiment, "--features", "experiment.features");
  key_option(experiment, "--source", "experiment.source");
  key_option(experiment, "--destination", "experiment.destination");
  key_option(experiment, "--shots", "experiment.shots");
  key_option(experiment, "--seeds", "experiment.seeds");
  key_option(experiment, "--epochs", "clf.epochs");
  key_option(experiment, "--batch-size", "clf.batch_size");
  key_option(experiment, "--dropout", "clf.dropout");

  auto* report = subcommand(app, "report", "re-render plots from a report.csv", {});
  path_option(report, "--input", input, "report.csv");
  path_option(report, "--out", out, "output directory");

  if (argc > 1 && argv[1][0] != '-') {
    const auto subs = app.get_subcommands([](const CLI::App*) { return true; });
    if (std::none_of(subs.begin(), subs.end(), [&](const CLI::App* a) { return a->get_name() == argv[1]; })) {
      std::cerr << "error: usage: unknown subcommand '" << argv[1] << "'\n\n" << app.help();
      return 2;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (syngen->parsed()) {
      const auto c = resolve("syngen", {{"out", &out}}, syngen_sections);
      const Dataset ds = generate(c.syngen);
      const auto written = emit(ds, out);
      std::cerr << "wrote " << written.size() << " files: " << ds.events.size() << " interactions, "
                << ds.posts.size() << " posts\n";
    } else if (build_enm->parsed()) {
      const auto c = resolve("build-enm", {{"data", &data}, {"out", &out}}, enm_sections);
      const Dataset ds = load_dataset(data, c.window());
      const auto nets = build_ego_networks(ds.events, ds.window, c.enm);
      write_file(out, format_ego_networks(nets));
      std::cerr << nets.size() << " active egos\n";
    } else if (sign->parsed()) {
      const auto c = resolve("sign", {{"data", &data}, {"networks", &networks}, {"out", &out}}, sign_sections);
      const Dataset ds = load_dataset(data, c.window());
      if (std::none_of(ds.events.begin(), ds.events.end(), [](const InteractionEvent& e) { return e.scorable(); })) {
        throw Error(ErrorKind::Usage, "sign needs interaction texts or sentiments, and " + data + " has neither");
      }
      const auto nets = parse_ego_networks(read_file(networks));
      const auto p = c.pipeline();
      const auto signed_nets = sign_ego_networks(nets, ds.events, p.lexicon, c.sign, c.enm.kinds, c.threads);
      write_file(out, format_signed_networks(signed_nets));
      std::size_t neg = 0, total = 0;
      for (const auto& s : signed_nets) {
        for (const auto& [_, v] : s.signs) neg += v == Sign::Negative, ++total;
      }
      std::cerr << total << " signed ties, " << neg << " negative\n";
    } else if (embed->parsed()) {
      const auto c = resolve("embed", {{"feature", &feature}, {"data", &data}, {"networks", &networks},
                                       {"signed", &signed_path}, {"out", &out}},
                             embed_sections);
      const Feature f = parse_feature(feature);
      const Dataset ds = load_dataset(data, c.window());
      std::vector<EgoNetwork> nets;
      std::vector<SignedEgoNetwork> signed_nets;
      if (f == Feature::Senm) {
        if (signed_path.empty()) throw Error(ErrorKind::Usage, "--signed is required for senm");
        signed_nets = parse_signed_networks(read_file(signed_path));
      } else if (f == Feature::EnmFull || f == Feature::EnmInner || f == Feature::EnmOuter) {
        if (networks.empty()) throw Error(ErrorKind::Usage, "--networks is required for " + feature);
        nets = parse_ego_networks(read_file(networks));
      }
      const auto users = authors_of(ds.posts);
      const auto result = embed_feature(f, {nets, signed_nets, ds.aux_graphs}, users, c.embed);
      write_file(out, format_embeddings(result.table, feature, c.embed.skipgram.seed));
      std::cerr << result.table.vectors.size() << " vectors; " << result.zero_vector_users.size() << " of "
                << users.size() << " post authors get zero vectors\n";
    } else if (train_cmd->parsed()) {
      const auto c = resolve("train", {{"posts", &posts_path}, {"embeddings", &embeddings}, {"targets", &targets},
                                       {"out", &out}},
                             clf_sections);
      const auto posts = posts_for(posts_path, targets);
      const auto table = parse_embeddings(read_file(embeddings));
      std::vector<LabeledVector> examples;
      for (const auto& p : posts) examples.push_back({table.vector_or_zero(p.author), p.stance});
      const Model m = train(examples, c.clf);
      write_file(out, format_model(m));
      std::cerr << "trained on " << examples.size() << " posts, final loss " << m.final_loss << "\n";
    } else if (predict_cmd->parsed()) {
      resolve("predict", {{"model", &model_path}, {"posts", &posts_path}, {"embeddings", &embeddings},
                          {"targets", &targets}, {"out", &out}},
              {});
      const Model m = parse_model(read_file(model_path));
      const auto posts = posts_for(posts_path, targets);
      const auto table = parse_embeddings(read_file(embeddings));
      if (table.dimension != m.input_dim()) throw Error(ErrorKind::Validation, "embedding and model dimensions differ");
      ExternalPredictions preds;
      for (const auto& p : posts) {
        const auto r = predict(m, table.vector_or_zero(p.author));
        preds[p.id] = {r.label, r.confidence};
      }
      write_file(out, format_predictions(preds));
      std::cerr << preds.size() << " predictions\n";
    } else if (vote_cmd->parsed()) {
      std::string joined;
      for (const auto& v : vote_inputs) joined += (joined.empty() ? "" : " ") + v;
      resolve("vote", {{"input", &joined}, {"out", &out}}, {});
      std::map<std::string, std::string> inputs;
      for (const auto& spec : vote_inputs) {
        auto [name, path] = cli::split_assignment(spec);
        if (!inputs.emplace(name, path).second) throw Error(ErrorKind::Usage, "feature '" + name + "' given twice");
      }
      std::set<std::string> use(vote_features.begin(), vote_features.end());
      if (use.empty()) {
        for (const auto& [name, _] : inputs) use.insert(name);
      }
      // Slates cover every post labelled by at least one voting feature.
      std::map<PostId, VoteSlate> slates;
      for (const auto& name : use) {
        if (!inputs.contains(name)) throw Error(ErrorKind::Usage, "no --input for feature '" + name + "'");
        for (const auto& [id, pred] : load_predictions(inputs.at(name))) {
          auto& s = slates[id];
          s.post_id = id;
          s.votes.push_back({name, pred.label, pred.confidence});
        }
      }
      std::vector<VoteSlate> list;
      for (auto& [_, s] : slates) list.push_back(std::move(s));
      const auto finals = vote_all(list, use);
      write_file(out, format_final_predictions(finals));
      std::cerr << finals.size() << " posts voted\n";
    } else if (experiment->parsed()) {
      std::string joined;
      for (const auto& v : precomputed) joined += (joined.empty() ? "" : " ") + v;
      auto c = resolve("experiment", {{"data", &data}, {"out", &out}, {"embeddings", &joined}}, exp_sections);
      const Dataset ds = load_dataset(data, c.window());

      std::map<std::string, EmbeddingTable> given;
      for (const auto& spec : precomputed) {
        const auto [name, path] = cli::split_assignment(spec);
        given[name] = parse_embeddings(read_file(path));
      }
      std::vector<std::string> todo;
      for (const auto& b : required_branches(c.experiment.feature_sets)) {
        if (!given.contains(b)) todo.push_back(b);
      }
      auto state = prepare_artifacts(ds, todo, c.pipeline());
      for (auto& [name, table] : given) state.artifacts.embeddings[name] = std::move(table);
      for (const auto& [branch, users] : state.zero_vector_users) {
        if (!users.empty()) std::cerr << "note: " << branch << ": " << users.size() << " post authors get zero vectors\n";
      }

      std::vector<ReportRow> rows;
      for (const auto& [src, dst] : target_pairs(ds.posts, c.experiment)) {
        ExperimentConfig e = c.experiment;
        e.source = src;
        e.destination = dst;
        const auto result = run_experiment(e, ds.posts, state.artifacts);
        for (const auto& n : result.notes) std::cerr << "note: " << src << "->" << dst << ": " << n << "\n";
        for (const auto& r : result.rows) {
          if (!r.seed && r.shot == e.shots.back()) {
            std::cerr << src << "->" << dst << " " << r.features << " " << r.shot << "-shot mean macro-F1 "
                      << r.macro_f1 << "\n";
          }
        }
        rows.insert(rows.end(), result.rows.begin(), result.rows.end());
      }
      const auto written = emit_report(rows, out);
      write_file(fs::path(out) / "config.ini", cli::describe(c, {"general", "data", "enm", "senm", "embed", "clf", "experiment"}));
      std::cerr << "wrote " << written.size() + 1 << " files to " << out << "\n";
    } else if (report->parsed()) {
      resolve("report", {{"input", &input}, {"out", &out}}, {});
      const auto rows = parse_report(read_file(input));
      const auto written = emit_report(rows, out);
      std::cerr << "wrote " << written.size() << " files to " << out << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return e.kind() == ErrorKind::Usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
