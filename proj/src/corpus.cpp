#include "eventaware/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "eventaware/diagnostics.hpp"
#include "eventaware/error.hpp"
#include "eventaware/rng.hpp"

namespace eventaware {
namespace {

constexpr std::string_view kHeader = "id\tevent\tlabel\ttext";

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string::npos) {
      cols.push_back(line.substr(start));
      return cols;
    }
    cols.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim(const std::string& s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  auto b = std::find_if_not(s.begin(), s.end(), is_space);
  auto e = std::find_if_not(s.rbegin(), s.rend(), is_space).base();
  return b < e ? std::string(b, e) : std::string();
}

std::size_t index_in(const std::vector<std::string>& vocab, const std::string& value,
                     const char* what) {
  auto it = std::find(vocab.begin(), vocab.end(), value);
  if (it == vocab.end())
    throw Error(ErrorKind::index, std::string("unknown ") + what + " '" + value + "'");
  return static_cast<std::size_t>(it - vocab.begin());
}

}  // namespace

std::size_t Corpus::label_index(const std::string& label) const {
  return index_in(label_vocab, label, "label");
}

std::size_t Corpus::event_index(const std::string& event) const {
  return index_in(event_vocab, event, "event");
}

void Corpus::validate() const {
  std::unordered_set<std::string> ids;
  const std::set<std::string> events(event_vocab.begin(), event_vocab.end());
  const std::set<std::string> labels(label_vocab.begin(), label_vocab.end());
  for (const auto& ex : examples) {
    if (!ids.insert(ex.id).second)
      throw Error(ErrorKind::duplicate_id, "duplicate example id '" + ex.id + "'");
    if (!events.contains(ex.event_type))
      throw Error(ErrorKind::invalid_metadata,
                  "example '" + ex.id + "' has event outside vocabulary: " + ex.event_type);
    if (!labels.contains(ex.label))
      throw Error(ErrorKind::invalid_metadata,
                  "example '" + ex.id + "' has label outside vocabulary: " + ex.label);
    if (trim(ex.text).empty())
      throw Error(ErrorKind::parse, "example '" + ex.id + "' has empty text");
  }
}

Corpus Corpus::with_examples(std::vector<Example> subset) const {
  return Corpus{std::move(subset), event_vocab, label_vocab};
}

SplitPart parse_split_part(const std::string& s) {
  if (s == "train") return SplitPart::train;
  if (s == "dev") return SplitPart::dev;
  if (s == "test") return SplitPart::test;
  throw Error(ErrorKind::parse, "unknown split '" + s + "'");
}

std::string_view to_string(SplitPart p) {
  switch (p) {
    case SplitPart::train: return "train";
    case SplitPart::dev: return "dev";
    case SplitPart::test: return "test";
  }
  return "?";
}

double CategoricalDist::at(const std::string& label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return probs[i];
  throw Error(ErrorKind::index, "label '" + label + "' not in distribution support");
}

std::string escape_field(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(const std::string& escaped) {
  std::string out;
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    const char c = escaped[i];
    if (c != '\\' || i + 1 == escaped.size()) {
      out += c;
      continue;
    }
    const char n = escaped[++i];
    switch (n) {
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case '\\': out += '\\'; break;
      default:
        out += '\\';
        out += n;
    }
  }
  return out;
}

Corpus read_corpus_tsv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  Corpus corpus;
  std::set<std::string> events;
  std::set<std::string> labels;
  std::unordered_set<std::string> ids;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!saw_header) {
      if (line != kHeader)
        throw Error(ErrorKind::parse, "line 1: expected header 'id\\tevent\\tlabel\\ttext'");
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 4)
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": expected 4 columns, got " +
                                        std::to_string(cols.size()));
    Example ex{unescape_field(cols[0]), unescape_field(cols[3]), unescape_field(cols[1]),
               unescape_field(cols[2])};
    if (ex.id.empty())
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": empty id");
    if (trim(ex.text).empty())
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": empty text");
    if (ex.event_type.empty() || ex.label.empty())
      throw Error(ErrorKind::parse,
                  "line " + std::to_string(line_no) + ": empty event or label");
    if (!ids.insert(ex.id).second)
      throw Error(ErrorKind::duplicate_id,
                  "line " + std::to_string(line_no) + ": duplicate id '" + ex.id + "'");
    events.insert(ex.event_type);
    labels.insert(ex.label);
    corpus.examples.push_back(std::move(ex));
  }
  if (corpus.examples.empty()) throw Error(ErrorKind::empty_corpus, "corpus has no examples");
  corpus.event_vocab.assign(events.begin(), events.end());
  corpus.label_vocab.assign(labels.begin(), labels.end());
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open corpus file " + path.string());
  return read_corpus_tsv(in);
}

void write_corpus_tsv(std::ostream& out, const Corpus& corpus) {
  out << kHeader << '\n';
  for (const auto& ex : corpus.examples) {
    out << escape_field(ex.id) << '\t' << escape_field(ex.event_type) << '\t'
        << escape_field(ex.label) << '\t' << escape_field(ex.text) << '\n';
  }
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write corpus file " + path.string());
  write_corpus_tsv(out, corpus);
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

std::map<std::string, SplitPart> load_split_assignments(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open split file " + path.string());
  std::map<std::string, SplitPart> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "id\tsplit")
        throw Error(ErrorKind::parse, "split file line 1: expected header 'id\\tsplit'");
      continue;
    }
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 2)
      throw Error(ErrorKind::parse, "split file line " + std::to_string(line_no) +
                                        ": expected 2 columns");
    out[unescape_field(cols[0])] = parse_split_part(cols[1]);
  }
  return out;
}

void save_split_assignments(const std::filesystem::path& path,
                            const std::vector<std::pair<std::string, SplitPart>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write split file " + path.string());
  out << "id\tsplit\n";
  for (const auto& [id, part] : rows) out << escape_field(id) << '\t' << to_string(part) << '\n';
}

SplitSet split_official(const Corpus& corpus,
                        const std::map<std::string, SplitPart>& assignment) {
  std::vector<Example> parts[3];
  for (const auto& ex : corpus.examples) {
    auto it = assignment.find(ex.id);
    if (it == assignment.end())
      throw Error(ErrorKind::missing_assignment, "no split assignment for id '" + ex.id + "'");
    parts[static_cast<int>(it->second)].push_back(ex);
  }
  return SplitSet{corpus.with_examples(std::move(parts[0])),
                  corpus.with_examples(std::move(parts[1])),
                  corpus.with_examples(std::move(parts[2]))};
}

std::vector<LoetoFold> loeto_splits(const Corpus& corpus, double dev_fraction,
                                    std::uint64_t seed) {
  if (dev_fraction < 0.0 || dev_fraction > 1.0)
    throw Error(ErrorKind::parameter, "dev_fraction must lie in [0, 1]");
  std::set<std::string> present;
  for (const auto& ex : corpus.examples) present.insert(ex.event_type);
  if (present.size() < 2)
    throw Error(ErrorKind::parameter, "leave-one-event-out needs at least 2 event types");

  std::vector<LoetoFold> folds;
  for (std::size_t e = 0; e < corpus.event_vocab.size(); ++e) {
    const auto& event = corpus.event_vocab[e];
    std::vector<Example> train;
    std::vector<Example> held;
    for (const auto& ex : corpus.examples)
      (ex.event_type == event ? held : train).push_back(ex);
    if (held.empty()) {
      diag::warn({"loeto_empty_event", "event has no examples; fold skipped", {{"event", event}}});
      continue;
    }
    // One stream per event so that folds do not depend on each other.
    Rng rng(mix_seed(seed, e));
    rng.shuffle(std::span<Example>(held));
    const auto n_dev = static_cast<std::size_t>(
        std::floor(dev_fraction * static_cast<double>(held.size())));
    std::vector<Example> dev(held.begin(), held.begin() + static_cast<std::ptrdiff_t>(n_dev));
    std::vector<Example> test(held.begin() + static_cast<std::ptrdiff_t>(n_dev), held.end());
    folds.push_back({event, SplitSet{corpus.with_examples(std::move(train)),
                                     corpus.with_examples(std::move(dev)),
                                     corpus.with_examples(std::move(test))}});
  }
  return folds;
}

CategoricalDist label_distribution(const std::vector<Example>& examples,
                                   const std::vector<std::string>& label_vocab,
                                   double smoothing) {
  if (label_vocab.empty())
    throw Error(ErrorKind::parameter, "label vocabulary is empty");
  if (smoothing < 0.0) throw Error(ErrorKind::parameter, "smoothing must be non-negative");
  std::vector<double> counts(label_vocab.size(), 0.0);
  for (const auto& ex : examples) counts[index_in(label_vocab, ex.label, "label")] += 1.0;
  const double n = static_cast<double>(examples.size());
  const double denom = n + smoothing * static_cast<double>(label_vocab.size());
  if (denom <= 0.0)
    throw Error(ErrorKind::undefined_distribution,
                "label distribution of zero examples without smoothing");
  CategoricalDist d{label_vocab, {}};
  d.probs.reserve(counts.size());
  for (double c : counts) d.probs.push_back((c + smoothing) / denom);
  return d;
}

EventDistributions distributions_by_event(const Corpus& corpus) {
  EventDistributions out;
  std::map<std::string, std::vector<Example>> grouped;
  for (const auto& ex : corpus.examples) grouped[ex.event_type].push_back(ex);
  const double n = static_cast<double>(corpus.size());
  for (const auto& event : corpus.event_vocab) {
    const auto& group = grouped[event];
    out.event_count[event] = group.size();
    out.event_share[event] = n > 0 ? static_cast<double>(group.size()) / n : 0.0;
    if (!group.empty()) out.per_event[event] = label_distribution(group, corpus.label_vocab);
  }
  return out;
}

}  // namespace eventaware
