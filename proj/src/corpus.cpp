#include "egostance/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "egostance/error.hpp"

namespace egostance {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view field, std::string_view what) {
  field = trim(field);
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw Error(ErrorKind::Parse, "invalid " + std::string(what) + " '" + std::string(field) + "'");
  }
  return value;
}

Error line_error(std::size_t line, const std::string& msg) {
  return Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string_view> split_lines(std::string_view content) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

void expect_header(const std::vector<std::vector<std::string>>& rows, const std::vector<std::string>& header,
                   std::string_view file_kind) {
  if (rows.empty()) throw Error(ErrorKind::Parse, std::string(file_kind) + ": missing header");
  std::vector<std::string> got;
  for (const auto& f : rows.front()) got.push_back(lower(trim(f)));
  if (got != header) throw Error(ErrorKind::Parse, std::string(file_kind) + ": unexpected header");
}

}  // namespace

std::string_view to_string(Stance s) { return s == Stance::Favor ? "FAVOR" : "AGAINST"; }

std::string_view to_string(InteractionKind k) {
  switch (k) {
    case InteractionKind::Reply: return "reply";
    case InteractionKind::Mention: return "mention";
    case InteractionKind::Other: return "other";
  }
  return "other";
}

std::string_view to_string(AuxKind k) {
  switch (k) {
    case AuxKind::Likes: return "likes";
    case AuxKind::Followers: return "followers";
    case AuxKind::Friends: return "friends";
  }
  return "likes";
}

Stance parse_stance(std::string_view s) {
  const std::string l = lower(trim(s));
  if (l == "favor") return Stance::Favor;
  if (l == "against") return Stance::Against;
  throw Error(ErrorKind::Parse, "unknown stance '" + std::string(s) + "'");
}

InteractionKind parse_interaction_kind(std::string_view s) {
  const std::string l = lower(trim(s));
  if (l == "reply") return InteractionKind::Reply;
  if (l == "mention") return InteractionKind::Mention;
  if (l == "other") return InteractionKind::Other;
  throw Error(ErrorKind::Parse, "unknown interaction kind '" + std::string(s) + "'");
}

AuxKind parse_aux_kind(std::string_view s) {
  const std::string l = lower(trim(s));
  if (l == "likes") return AuxKind::Likes;
  if (l == "followers") return AuxKind::Followers;
  if (l == "friends") return AuxKind::Friends;
  throw Error(ErrorKind::Parse, "unknown aux graph kind '" + std::string(s) + "'");
}

ObservationWindow::ObservationWindow(Timestamp s, Timestamp e) : start(s), end(e) {
  if (!(s < e)) throw Error(ErrorKind::Validation, "observation window requires start < end");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// interactions.jsonl
// ---------------------------------------------------------------------------

InteractionLoad parse_interactions(std::string_view content, const ObservationWindow& window) {
  using nlohmann::json;
  InteractionLoad result;
  const auto lines = split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    if (trim(lines[i]).empty()) continue;
    ++result.total_lines;

    json obj;
    try {
      obj = json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      throw line_error(lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw line_error(lineno, "expected a JSON object");

    InteractionEvent ev;
    try {
      if (!obj.contains("ego") || !obj.contains("alter") || !obj.contains("ts") || !obj.contains("kind")) {
        throw line_error(lineno, "missing one of ego, alter, ts, kind");
      }
      if (!obj["ts"].is_number_integer()) throw line_error(lineno, "ts must be an integer");
      ev.ego = obj["ego"].get<std::string>();
      ev.alter = obj["alter"].get<std::string>();
      ev.ts = obj["ts"].get<Timestamp>();
      ev.kind = parse_interaction_kind(obj["kind"].get<std::string>());
      if (auto it = obj.find("text"); it != obj.end() && !it->is_null()) ev.text = it->get<std::string>();
      if (auto it = obj.find("sentiment"); it != obj.end() && !it->is_null()) {
        if (!it->is_number()) throw line_error(lineno, "sentiment must be a number");
        ev.sentiment = it->get<double>();
      }
    } catch (const json::exception& e) {
      throw line_error(lineno, std::string("bad field type: ") + e.what());
    } catch (const Error& e) {
      if (std::string_view(e.what()).starts_with("line ")) throw;
      throw line_error(lineno, e.what());
    }

    if (ev.ego.empty() || ev.alter.empty()) {
      result.rejected.push_back({lineno, "empty user id"});
    } else if (ev.ego == ev.alter) {
      result.rejected.push_back({lineno, "self-interaction (ego == alter)"});
    } else if (!window.contains(ev.ts)) {
      result.rejected.push_back({lineno, "timestamp outside observation window"});
    } else if (ev.sentiment && !(*ev.sentiment >= -1.0 && *ev.sentiment <= 1.0)) {
      result.rejected.push_back({lineno, "sentiment outside [-1, 1]"});
    } else {
      result.events.push_back(std::move(ev));
    }
  }
  return result;
}

InteractionLoad load_interactions(const std::filesystem::path& path, const ObservationWindow& window) {
  try {
    return parse_interactions(read_file(path), window);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    throw;
  }
}

std::string format_interaction(const InteractionEvent& e) {
  nlohmann::ordered_json obj;
  obj["ego"] = e.ego;
  obj["alter"] = e.alter;
  obj["ts"] = e.ts;
  obj["kind"] = std::string(to_string(e.kind));
  if (e.text) obj["text"] = *e.text;
  if (e.sentiment) obj["sentiment"] = *e.sentiment;
  return obj.dump();
}

std::string format_interactions(std::span<const InteractionEvent> events) {
  std::string out;
  for (const auto& e : events) {
    out += format_interaction(e);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

std::vector<std::vector<std::string>> parse_csv(std::string_view content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_row = [&] {
    if (field_started || !row.empty() || !field.empty()) {
      row.push_back(std::move(field));
      rows.push_back(std::move(row));
    }
    row.clear();
    field.clear();
    field_started = false;
  };
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorKind::Parse, "unterminated quoted CSV field");
  end_row();
  return rows;
}

std::string csv_quote(std::string_view field) {
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// ---------------------------------------------------------------------------
// posts.csv
// ---------------------------------------------------------------------------

std::vector<Post> parse_posts(std::string_view content) {
  const auto rows = parse_csv(content);
  expect_header(rows, {"post_id", "author_id", "target", "stance", "ts", "text"}, "posts.csv");
  std::vector<Post> posts;
  posts.reserve(rows.size() - 1);
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    const std::string where = "posts.csv row " + std::to_string(r + 1) + ": ";
    if (f.size() != 6) throw Error(ErrorKind::Parse, where + "expected 6 fields, got " + std::to_string(f.size()));
    Post p;
    p.id = std::string(trim(f[0]));
    p.author = std::string(trim(f[1]));
    p.target = std::string(trim(f[2]));
    try {
      p.stance = parse_stance(f[3]);
      p.ts = parse_number<Timestamp>(f[4], "timestamp");
    } catch (const Error& e) {
      throw Error(ErrorKind::Parse, where + e.what());
    }
    p.text = f[5];
    if (p.id.empty() || p.author.empty()) throw Error(ErrorKind::Parse, where + "empty post_id or author_id");
    if (p.target.empty()) throw Error(ErrorKind::Parse, where + "empty target");
    if (!seen.insert(p.id).second) throw Error(ErrorKind::Parse, where + "duplicate post_id '" + p.id + "'");
    posts.push_back(std::move(p));
  }
  return posts;
}

std::vector<Post> load_posts(const std::filesystem::path& path) {
  try {
    return parse_posts(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    throw;
  }
}

std::string format_posts(std::span<const Post> posts) {
  std::string out = "post_id,author_id,target,stance,ts,text\n";
  for (const auto& p : posts) {
    out += p.id + ',' + p.author + ',' + p.target + ',' + std::string(to_string(p.stance)) + ',' +
           std::to_string(p.ts) + ',' + csv_quote(p.text) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// aux graph edge lists
// ---------------------------------------------------------------------------

AuxGraph parse_aux_graph(std::string_view content, AuxKind kind) {
  AuxGraph g;
  g.kind = kind;
  const auto lines = split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ss{std::string(line)};
    std::string a, b, extra;
    if (!(ss >> a >> b) || (ss >> extra)) throw line_error(i + 1, "expected two user ids");
    if (a == b) throw line_error(i + 1, "self-loop '" + a + "'");
    g.edges.emplace_back(std::move(a), std::move(b));
  }
  return g;
}

AuxGraph load_aux_graph(const std::filesystem::path& path, AuxKind kind) {
  try {
    return parse_aux_graph(read_file(path), kind);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    throw;
  }
}

std::string format_aux_graph(const AuxGraph& g) {
  std::string out;
  for (const auto& [a, b] : g.edges) out += a + ' ' + b + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// predictions.csv
// ---------------------------------------------------------------------------

ExternalPredictions parse_predictions(std::string_view content) {
  const auto rows = parse_csv(content);
  expect_header(rows, {"post_id", "label", "confidence"}, "predictions.csv");
  ExternalPredictions out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    const std::string where = "predictions.csv row " + std::to_string(r + 1) + ": ";
    if (f.size() != 3) throw Error(ErrorKind::Parse, where + "expected 3 fields");
    ExternalPrediction p;
    try {
      p.label = parse_stance(f[1]);
      p.confidence = parse_number<double>(f[2], "confidence");
    } catch (const Error& e) {
      throw Error(ErrorKind::Parse, where + e.what());
    }
    if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) throw Error(ErrorKind::Parse, where + "confidence outside [0, 1]");
    const std::string id(trim(f[0]));
    if (!out.emplace(id, p).second) throw Error(ErrorKind::Parse, where + "duplicate post_id '" + id + "'");
  }
  return out;
}

ExternalPredictions load_predictions(const std::filesystem::path& path) {
  try {
    return parse_predictions(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    throw;
  }
}

std::string format_predictions(const ExternalPredictions& preds) {
  std::string out = "post_id,label,confidence\n";
  char buf[64];
  for (const auto& [id, p] : preds) {
    std::snprintf(buf, sizeof buf, "%.17g", p.confidence);
    out += id + ',' + std::string(to_string(p.label)) + ',' + buf + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// validation
// ---------------------------------------------------------------------------

ValidationReport validate_corpus(std::span<const InteractionEvent> events, std::span<const Post> posts,
                                 std::span<const AuxGraph> aux_graphs, const ExternalPredictions& predictions) {
  std::unordered_set<std::string_view> in_events;
  for (const auto& e : events) {
    in_events.insert(e.ego);
    in_events.insert(e.alter);
  }

  ValidationReport report;
  std::set<UserId> gaps;
  std::unordered_set<std::string_view> post_ids;
  for (const auto& p : posts) {
    post_ids.insert(p.id);
    if (!in_events.contains(p.author)) gaps.insert(p.author);
  }
  report.coverage_gaps.assign(gaps.begin(), gaps.end());

  for (const auto& [id, _] : predictions) {
    if (!post_ids.contains(id)) report.unknown_prediction_posts.push_back(id);
  }

  for (const auto& g : aux_graphs) {
    std::set<UserId> unseen;
    for (const auto& [a, b] : g.edges) {
      if (!in_events.contains(a)) unseen.insert(a);
      if (!in_events.contains(b)) unseen.insert(b);
    }
    for (const auto& u : unseen) report.aux_unseen_users.emplace_back(g.kind, u);
  }
  return report;
}

}  // namespace egostance
