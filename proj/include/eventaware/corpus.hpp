#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace eventaware {

struct Example {
  std::string id;
  std::string text;
  std::string event_type;
  std::string label;
  // Set by the synthetic generator; not part of the TSV format.
  bool ambiguous = false;

  friend bool operator==(const Example&, const Example&) = default;
};

/// Labeled examples plus the ordered event and label vocabularies.
struct Corpus {
  std::vector<Example> examples;
  std::vector<std::string> event_vocab;
  std::vector<std::string> label_vocab;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }

  /// Index of a label in label_vocab; throws Error(index) if absent.
  std::size_t label_index(const std::string& label) const;
  std::size_t event_index(const std::string& event) const;

  /// Checks ids are unique and vocabulary membership; throws on violation.
  void validate() const;

  /// Same vocabularies, given subset of examples.
  Corpus with_examples(std::vector<Example> subset) const;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

struct SplitSet {
  Corpus train;
  Corpus dev;
  Corpus test;
};

enum class SplitPart { train, dev, test };

SplitPart parse_split_part(const std::string& s);
std::string_view to_string(SplitPart p);

/// Label -> probability, ordered as the label vocabulary it was built from.
struct CategoricalDist {
  std::vector<std::string> labels;
  std::vector<double> probs;

  double at(const std::string& label) const;
  std::size_t size() const { return probs.size(); }
};

// TSV: header `id<TAB>event<TAB>label<TAB>text`; tabs, newlines and
// backslashes inside fields are escaped as \t, \n and \\.
std::string escape_field(const std::string& raw);
std::string unescape_field(const std::string& escaped);

Corpus read_corpus_tsv(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);
void write_corpus_tsv(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

/// Split assignment file: header `id<TAB>split`, split in {train,dev,test}.
std::map<std::string, SplitPart> load_split_assignments(const std::filesystem::path& path);
void save_split_assignments(const std::filesystem::path& path,
                            const std::vector<std::pair<std::string, SplitPart>>& rows);

SplitSet split_official(const Corpus& corpus,
                        const std::map<std::string, SplitPart>& assignment);

struct LoetoFold {
  std::string held_out_event;
  SplitSet splits;
};

/// Leave-one-event-type-out folds. Events without examples are skipped with
/// a warning.
std::vector<LoetoFold> loeto_splits(const Corpus& corpus, double dev_fraction,
                                    std::uint64_t seed);

/// (count(l) + smoothing) / (N + smoothing * |vocab|) per label.
CategoricalDist label_distribution(const std::vector<Example>& examples,
                                   const std::vector<std::string>& label_vocab,
                                   double smoothing = 0.0);

/// Per-event label distributions plus the event proportions.
struct EventDistributions {
  std::map<std::string, CategoricalDist> per_event;
  std::map<std::string, double> event_share;
  std::map<std::string, std::size_t> event_count;
};

EventDistributions distributions_by_event(const Corpus& corpus);

}  // namespace eventaware
