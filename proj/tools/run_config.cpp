#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <type_traits>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "egostance/error.hpp"

namespace egostance::cli {

namespace {

// ---- scalar and list codecs

std::string strip(std::string_view text) {
  std::string s(text);
  boost::algorithm::trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> list_items(std::string_view text) {
  std::string s = strip(text);
  if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<std::string> parts, out;
  boost::algorithm::split(parts, s, boost::is_any_of(","));
  for (const auto& p : parts) {
    const std::string item = strip(p);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text) {
  const std::string s = strip(text);
  T v{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
    throw Error(ErrorKind::Usage, "'" + s + "' is not a valid number");
  }
  return v;
}

bool parse_bool(std::string_view text) {
  const std::string s = boost::algorithm::to_lower_copy(strip(text));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw Error(ErrorKind::Usage, "'" + s + "' is not a boolean");
}

template <typename T>
std::string show_number(T v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <typename T>
std::string show_list(const std::vector<T>& xs) {
  std::string out;
  for (const auto& x : xs) {
    if (!out.empty()) out += ",";
    if constexpr (std::is_same_v<T, std::string>) {
      out += x;
    } else {
      out += show_number(x);
    }
  }
  return out;
}

template <typename T>
struct Codec;

template <>
struct Codec<double> {
  static double parse(std::string_view s) { return parse_number<double>(s); }
  static std::string show(double v) { return show_number(v); }
};
template <>
struct Codec<bool> {
  static bool parse(std::string_view s) { return parse_bool(s); }
  static std::string show(bool v) { return v ? "true" : "false"; }
};
template <>
struct Codec<std::string> {
  static std::string parse(std::string_view s) { return strip(s); }
  static std::string show(const std::string& v) { return v; }
};
template <typename T>
  requires std::is_integral_v<T>
struct Codec<T> {
  static T parse(std::string_view s) { return parse_number<T>(s); }
  static std::string show(T v) { return show_number(v); }
};
template <typename T>
struct Codec<std::vector<T>> {
  static std::vector<T> parse(std::string_view s) {
    std::vector<T> out;
    for (const auto& item : list_items(s)) out.push_back(Codec<T>::parse(item));
    return out;
  }
  static std::string show(const std::vector<T>& v) { return show_list(v); }
};
template <typename T>
struct Codec<std::optional<T>> {
  static std::optional<T> parse(std::string_view s) {
    if (strip(s) == "auto") return std::nullopt;
    return Codec<T>::parse(s);
  }
  static std::string show(const std::optional<T>& v) { return v ? Codec<T>::show(*v) : "auto"; }
};
template <>
struct Codec<std::set<InteractionKind>> {
  static std::set<InteractionKind> parse(std::string_view s) {
    std::set<InteractionKind> out;
    for (const auto& item : list_items(s)) out.insert(parse_interaction_kind(item));
    if (out.empty()) throw Error(ErrorKind::Usage, "at least one interaction kind is required");
    return out;
  }
  static std::string show(const std::set<InteractionKind>& v) {
    std::string out;
    for (auto k : v) out += (out.empty() ? "" : ",") + std::string(to_string(k));
    return out;
  }
};

template <typename F>
Param field(std::string section, std::string key, std::string help, F ref) {
  using T = std::remove_cvref_t<decltype(ref(std::declval<RunConfig&>()))>;
  return Param{std::move(section), std::move(key), std::move(help),
               [ref](const RunConfig& c) { return Codec<T>::show(ref(const_cast<RunConfig&>(c))); },
               [ref](RunConfig& c, std::string_view v) { ref(c) = Codec<T>::parse(v); }};
}

#define EGO_FIELD(section, key, help, expr) field(section, key, help, [](RunConfig& c) -> auto& { return expr; })

std::vector<Param> build_params() {
  std::vector<Param> p{
      EGO_FIELD("general", "threads", "worker threads for enm, embed and experiment", c.threads),
      EGO_FIELD("general", "seed", "sets syngen, embed and clf seeds at once", c.seed),

      EGO_FIELD("syngen", "users", "number of synthetic users", c.syngen.n_users),
      EGO_FIELD("syngen", "targets", "target names", c.syngen.targets),
      EGO_FIELD("syngen", "stance_correlation", "P(later stance agrees with the first)", c.syngen.stance_correlation),
      EGO_FIELD("syngen", "homophily", "P(a tie joins same-stance users)", c.syngen.homophily),
      EGO_FIELD("syngen", "circle_sizes", "cumulative circle sizes", c.syngen.circle_sizes),
      EGO_FIELD("syngen", "negative_rate_cross", "negative interaction rate across camps", c.syngen.negative_rate_cross),
      EGO_FIELD("syngen", "negative_rate_same", "negative interaction rate within a camp", c.syngen.negative_rate_same),
      EGO_FIELD("syngen", "posts_per_user", "Poisson mean posts per user and target", c.syngen.posts_per_user),
      EGO_FIELD("syngen", "posts_per_target", "exact posts per target (0: use posts_per_user)", c.syngen.posts_per_target),
      EGO_FIELD("syngen", "months", "observation window length in months", c.syngen.months),
      EGO_FIELD("syngen", "start_ts", "window start, UTC seconds", c.syngen.start_ts),
      EGO_FIELD("syngen", "top_rate", "monthly interactions with the innermost alters", c.syngen.top_rate),
      EGO_FIELD("syngen", "ring_decay", "rate ratio between consecutive rings", c.syngen.ring_decay),
      EGO_FIELD("syngen", "rate_jitter", "log-normal sigma on per-alter rates", c.syngen.rate_jitter),
      EGO_FIELD("syngen", "inactive_fraction", "users whose timeline stops early", c.syngen.inactive_fraction),
      EGO_FIELD("syngen", "aux_degree", "edges per user in each auxiliary graph", c.syngen.aux_degree),
      EGO_FIELD("syngen", "text_accuracy", "accuracy of simulated text predictions", c.syngen.text_accuracy),
      EGO_FIELD("syngen", "event_text", "write texts (true) or sentiments (false)", c.syngen.event_text),
      EGO_FIELD("syngen", "seed", "generator seed", c.syngen.seed),

      EGO_FIELD("data", "window_start", "observation window start, UTC seconds", c.window_start),
      EGO_FIELD("data", "window_end", "observation window end, UTC seconds", c.window_end),

      EGO_FIELD("enm", "kinds", "interaction kinds counted as contact", c.enm.kinds),
      EGO_FIELD("enm", "min_span_months", "activity filter: minimum timeline span", c.enm.activity.min_span_months),
      EGO_FIELD("enm", "days_per_post", "activity filter: one posting day per this many days", c.enm.activity.days_per_post),
      EGO_FIELD("enm", "bandwidth", "mean-shift bandwidth (auto: per-ego estimate)", c.enm.bandwidth),

      EGO_FIELD("senm", "negative_ratio", "negative share above which a tie is negative", c.sign.negative_ratio),
      EGO_FIELD("senm", "count_neutral", "neutral interactions enter the denominator", c.sign.count_neutral),
      EGO_FIELD("senm", "lexicon", "lexicon.tsv path or 'builtin'", c.lexicon),

      EGO_FIELD("embed", "p", "node2vec return parameter", c.embed.walk.p),
      EGO_FIELD("embed", "q", "node2vec in-out parameter", c.embed.walk.q),
      EGO_FIELD("embed", "walk_length", "nodes per walk", c.embed.walk.walk_length),
      EGO_FIELD("embed", "walks_per_node", "walks started at each node", c.embed.walk.walks_per_node),
      EGO_FIELD("embed", "weighted", "edge weights bias the walk", c.embed.walk.weighted),
      EGO_FIELD("embed", "directed", "keep edge direction", c.embed.directed),
      EGO_FIELD("embed", "dimension", "embedding dimension", c.embed.skipgram.dimension),
      EGO_FIELD("embed", "window", "skip-gram context window", c.embed.skipgram.window),
      EGO_FIELD("embed", "negatives", "negative samples per pair", c.embed.skipgram.negatives),
      EGO_FIELD("embed", "epochs", "skip-gram passes over the walks", c.embed.skipgram.epochs),
      EGO_FIELD("embed", "learning_rate", "initial skip-gram learning rate", c.embed.skipgram.learning_rate),
      EGO_FIELD("embed", "learning_rate_floor", "final skip-gram learning rate", c.embed.skipgram.learning_rate_floor),
      EGO_FIELD("embed", "seed", "walk and skip-gram seed", c.embed.skipgram.seed),

      EGO_FIELD("clf", "hidden1", "first hidden layer width", c.clf.hidden1),
      EGO_FIELD("clf", "hidden2", "second hidden layer width", c.clf.hidden2),
      EGO_FIELD("clf", "batch_size", "mini-batch size", c.clf.batch_size),
      EGO_FIELD("clf", "dropout", "dropout on both hidden layers", c.clf.dropout),
      EGO_FIELD("clf", "learning_rate", "SGD learning rate", c.clf.learning_rate),
      EGO_FIELD("clf", "epochs", "training epochs", c.clf.epochs),
      EGO_FIELD("clf", "seed", "initialisation and shuffling seed", c.clf.seed),

      EGO_FIELD("experiment", "source", "source target (empty: every ordered pair)", c.experiment.source),
      EGO_FIELD("experiment", "destination", "destination target", c.experiment.destination),
      EGO_FIELD("experiment", "features", "feature sets: branch, ct-tn, or a+b", c.experiment.feature_sets),
      EGO_FIELD("experiment", "shots", "destination posts injected into training", c.experiment.shots),
      EGO_FIELD("experiment", "seeds", "split seeds", c.experiment.seeds),
      EGO_FIELD("experiment", "source_train_size", "source posts per training set", c.experiment.source_train_size),
      EGO_FIELD("experiment", "test_min", "smallest acceptable test pool", c.experiment.test_min),
      EGO_FIELD("experiment", "test_max", "test pool cap", c.experiment.test_max),
  };
  // The fan-out seed writes the per-stage seeds too.
  for (auto& param : p) {
    if (param.path() != "general.seed") continue;
    param.set = [](RunConfig& c, std::string_view v) {
      c.seed = Codec<std::uint64_t>::parse(v);
      c.syngen.seed = c.embed.skipgram.seed = c.clf.seed = *c.seed;
    };
  }
  return p;
}

#undef EGO_FIELD

}  // namespace

std::optional<ObservationWindow> RunConfig::window() const {
  if (!window_start && !window_end) return std::nullopt;
  if (!window_start || !window_end) throw Error(ErrorKind::Usage, "data.window_start and data.window_end go together");
  return ObservationWindow(*window_start, *window_end);
}

void RunConfig::finalize() {
  if (threads < 1) throw Error(ErrorKind::Usage, "threads must be >= 1");
  enm.threads = embed.threads = experiment.threads = threads;
  experiment.classifier = clf;
  validate(embed.walk);
  validate(embed.skipgram);
  validate(clf);
  if (!(sign.negative_ratio >= 0.0 && sign.negative_ratio < 1.0)) {
    throw Error(ErrorKind::Usage, "senm.negative_ratio must be in [0, 1)");
  }
  window();
}

PipelineParams RunConfig::pipeline() const {
  PipelineParams p;
  p.enm = enm;
  p.sign = sign;
  p.embed = embed;
  p.lexicon = lexicon == "builtin" ? Lexicon::builtin() : load_lexicon(lexicon);
  return p;
}

const std::vector<Param>& params() {
  static const std::vector<Param> table = build_params();
  return table;
}

const Param& find_param(std::string_view path) {
  for (const auto& p : params()) {
    if (p.path() == path) return p;
  }
  throw Error(ErrorKind::Usage, "unknown config key '" + std::string(path) + "'");
}

std::pair<std::string, std::string> split_assignment(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw Error(ErrorKind::Usage, "expected key=value, got '" + std::string(text) + "'");
  return {strip(text.substr(0, eq)), std::string(text.substr(eq + 1))};
}

void apply(RunConfig& config, std::string_view path, std::string_view value) {
  try {
    find_param(path).set(config, value);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Usage && std::string_view(e.what()).starts_with("unknown config key")) throw;
    throw Error(ErrorKind::Usage, std::string(path) + ": " + e.what());
  }
}

void apply_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      apply(config, "general." + name, node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) apply(config, name + "." + key, leaf.data());
  }
}

std::string describe(const RunConfig& config, const std::vector<std::string>& sections) {
  std::ostringstream out;
  std::string current;
  for (const auto& p : params()) {
    if (!sections.empty() && std::find(sections.begin(), sections.end(), p.section) == sections.end()) continue;
    if (p.section != current) {
      out << (current.empty() ? "" : "\n") << "[" << p.section << "]\n";
      current = p.section;
    }
    out << p.key << " = " << p.get(config) << "\n";
  }
  return out.str();
}

std::string help_table(const std::vector<std::string>& sections) {
  const RunConfig defaults;
  std::ostringstream out;
  out << "Config keys (--config file sections or --set section.key=value), with defaults:\n";
  for (const auto& p : params()) {
    if (std::find(sections.begin(), sections.end(), p.section) == sections.end()) continue;
    std::string name = p.path() + " = " + p.get(defaults);
    if (name.size() < 40) name.resize(40, ' ');
    out << "  " << name << "  " << p.help << "\n";
  }
  return out.str();
}

}  // namespace egostance::cli
