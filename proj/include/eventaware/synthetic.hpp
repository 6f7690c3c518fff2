#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "eventaware/corpus.hpp"

namespace eventaware {

/// Generator description for a desk-scale corpus whose labels depend on
/// (trigger word, event) interactions. Loaded from JSON.
struct SynthSpec {
  std::vector<std::string> events;
  std::vector<std::string> labels;
  std::size_t num_examples = 1000;
  // Probability that an example carries an ambiguous trigger.
  double ambiguous_rate = 0.5;
  // Probability that an example carries no trigger at all; its label is then
  // a pure draw from the event prior.
  double prior_only_rate = 0.0;
  // Event sampling weights; uniform when empty.
  std::map<std::string, double> event_weights;
  // event -> label -> weight
  std::map<std::string, std::map<std::string, double>> label_priors;
  // word -> label, regardless of event
  std::map<std::string, std::string> unambiguous_triggers;
  // word -> event -> label
  std::map<std::string, std::map<std::string, std::string>> ambiguous_triggers;
  // Each template holds one "{trigger}" slot and any number of "{filler}" slots.
  std::vector<std::string> templates;
  std::vector<std::string> fillers;
  // Official partition fractions used by gen-synth; must sum to 1.
  double train_fraction = 0.7;
  double dev_fraction = 0.1;
  double test_fraction = 0.2;

  /// Throws Error(spec_validation) on inconsistencies.
  void validate() const;
};

SynthSpec parse_synth_spec(const std::string& json_text);
SynthSpec load_synth_spec(const std::string& path);

struct SyntheticCorpus {
  Corpus corpus;
  std::vector<std::string> triggers;  // parallel to corpus.examples
  std::vector<std::pair<std::string, SplitPart>> assignment;
};

/// Deterministic in (spec, seed).
SyntheticCorpus generate_synthetic(const SynthSpec& spec, std::uint64_t seed);

}  // namespace eventaware
