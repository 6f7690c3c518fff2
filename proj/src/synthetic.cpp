#include "eventaware/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "eventaware/error.hpp"
#include "eventaware/rng.hpp"
#include "json.hpp"

namespace eventaware {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& msg) {
  throw Error(ErrorKind::spec_validation, "synthetic spec: " + msg);
}

bool has_control(const std::string& s) {
  return s.find_first_of("\t\n\r") != std::string::npos;
}

std::string render(const std::string& templ, const std::string& trigger,
                   const std::vector<std::string>& fillers, Rng& rng) {
  std::string out;
  std::size_t i = 0;
  while (i < templ.size()) {
    if (templ.compare(i, 9, "{trigger}") == 0) {
      out += trigger;
      i += 9;
    } else if (templ.compare(i, 8, "{filler}") == 0) {
      out += fillers[rng.below(fillers.size())];
      i += 8;
    } else {
      out += templ[i++];
    }
  }
  return out;
}

}  // namespace

void SynthSpec::validate() const {
  if (events.empty()) invalid("no events declared");
  if (labels.empty()) invalid("no labels declared");
  const std::set<std::string> ev(events.begin(), events.end());
  const std::set<std::string> lab(labels.begin(), labels.end());
  if (ev.size() != events.size()) invalid("duplicate event names");
  if (lab.size() != labels.size()) invalid("duplicate label names");
  for (const auto& e : events)
    if (e.empty() || has_control(e)) invalid("invalid event name '" + e + "'");
  for (const auto& l : labels)
    if (l.empty() || has_control(l)) invalid("invalid label name '" + l + "'");
  if (num_examples == 0) invalid("num_examples must be positive");
  if (ambiguous_rate < 0 || prior_only_rate < 0 || ambiguous_rate + prior_only_rate > 1.0)
    invalid("ambiguous_rate and prior_only_rate must be non-negative and sum to at most 1");

  for (const auto& [e, w] : event_weights) {
    if (!ev.contains(e)) invalid("event_weights names unknown event '" + e + "'");
    if (w < 0) invalid("negative event weight for '" + e + "'");
  }
  for (const auto& [e, priors] : label_priors) {
    if (!ev.contains(e)) invalid("label_priors names unknown event '" + e + "'");
    double total = 0;
    for (const auto& [l, w] : priors) {
      if (!lab.contains(l)) invalid("label_priors[" + e + "] names unknown label '" + l + "'");
      if (w < 0) invalid("negative prior weight in label_priors[" + e + "]");
      total += w;
    }
    if (total <= 0) invalid("label_priors[" + e + "] has zero total weight");
  }

  std::set<std::string> words;
  for (const auto& [w, l] : unambiguous_triggers) {
    if (w.empty() || has_control(w)) invalid("invalid trigger word '" + w + "'");
    if (!lab.contains(l)) invalid("trigger '" + w + "' maps to unknown label '" + l + "'");
    words.insert(w);
  }
  for (const auto& [w, mapping] : ambiguous_triggers) {
    if (w.empty() || has_control(w)) invalid("invalid trigger word '" + w + "'");
    if (!words.insert(w).second) invalid("word '" + w + "' is both ambiguous and unambiguous");
    for (const auto& e : events) {
      auto it = mapping.find(e);
      if (it == mapping.end())
        invalid("ambiguous word '" + w + "' has no label for event '" + e + "'");
      if (!lab.contains(it->second))
        invalid("ambiguous word '" + w + "' maps to unknown label '" + it->second + "'");
    }
    for (const auto& [e, l] : mapping)
      if (!ev.contains(e)) invalid("ambiguous word '" + w + "' names unknown event '" + e + "'");
  }
  if (ambiguous_rate > 0 && ambiguous_triggers.empty())
    invalid("ambiguous_rate > 0 but no ambiguous triggers declared");
  if (ambiguous_rate + prior_only_rate < 1.0 && unambiguous_triggers.empty())
    invalid("unambiguous examples requested but no unambiguous triggers declared");

  if (templates.empty()) invalid("no templates declared");
  bool uses_filler = false;
  for (const auto& t : templates) {
    if (has_control(t)) invalid("template contains a tab or newline");
    if (t.find("{trigger}") == std::string::npos)
      invalid("template '" + t + "' lacks a {trigger} slot");
    uses_filler |= t.find("{filler}") != std::string::npos;
  }
  if ((uses_filler || prior_only_rate > 0) && fillers.empty())
    invalid("templates need fillers but none declared");
  for (const auto& f : fillers) {
    if (f.empty() || has_control(f)) invalid("invalid filler '" + f + "'");
    if (words.contains(f)) invalid("filler '" + f + "' is also a trigger word");
  }

  for (double f : {train_fraction, dev_fraction, test_fraction})
    if (f < 0) invalid("split fractions must be non-negative");
  if (std::abs(train_fraction + dev_fraction + test_fraction - 1.0) > 1e-9)
    invalid("split fractions must sum to 1");
}

SynthSpec parse_synth_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::spec_validation, std::string("synthetic spec is not valid JSON: ") + e.what());
  }
  SynthSpec s;
  try {
    s.events = j.at("events").get<std::vector<std::string>>();
    s.labels = j.at("labels").get<std::vector<std::string>>();
    s.num_examples = j.value("num_examples", s.num_examples);
    s.ambiguous_rate = j.value("ambiguous_rate", s.ambiguous_rate);
    s.prior_only_rate = j.value("prior_only_rate", s.prior_only_rate);
    s.event_weights = j.value("event_weights", s.event_weights);
    s.label_priors = j.value("label_priors", s.label_priors);
    s.unambiguous_triggers = j.value("unambiguous_triggers", s.unambiguous_triggers);
    s.ambiguous_triggers = j.value("ambiguous_triggers", s.ambiguous_triggers);
    s.templates = j.at("templates").get<std::vector<std::string>>();
    s.fillers = j.value("fillers", s.fillers);
    if (j.contains("split")) {
      const auto& sp = j["split"];
      s.train_fraction = sp.value("train", s.train_fraction);
      s.dev_fraction = sp.value("dev", s.dev_fraction);
      s.test_fraction = sp.value("test", s.test_fraction);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::spec_validation, std::string("synthetic spec: ") + e.what());
  }
  s.validate();
  return s;
}

SynthSpec load_synth_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open synthetic spec " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_synth_spec(ss.str());
}

SyntheticCorpus generate_synthetic(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);

  std::vector<double> event_w;
  for (const auto& e : spec.events) {
    auto it = spec.event_weights.find(e);
    event_w.push_back(spec.event_weights.empty() ? 1.0
                      : it == spec.event_weights.end() ? 0.0
                                                       : it->second);
  }
  std::vector<std::vector<double>> prior_w;
  for (const auto& e : spec.events) {
    std::vector<double> w(spec.labels.size(), 1.0);
    if (auto it = spec.label_priors.find(e); it != spec.label_priors.end())
      for (std::size_t l = 0; l < spec.labels.size(); ++l) {
        auto jt = it->second.find(spec.labels[l]);
        w[l] = jt == it->second.end() ? 0.0 : jt->second;
      }
    prior_w.push_back(std::move(w));
  }
  std::vector<std::string> ambiguous_words;
  for (const auto& [w, _] : spec.ambiguous_triggers) ambiguous_words.push_back(w);
  std::vector<std::string> plain_words;
  for (const auto& [w, _] : spec.unambiguous_triggers) plain_words.push_back(w);

  const auto pick_word = [&](const std::vector<std::string>& pool, auto&& label_of,
                             const std::string& wanted) -> std::string {
    std::vector<std::string> matching;
    for (const auto& w : pool)
      if (label_of(w) == wanted) matching.push_back(w);
    const auto& from = matching.empty() ? pool : matching;
    return from[rng.below(from.size())];
  };

  SyntheticCorpus out;
  out.corpus.event_vocab = spec.events;
  out.corpus.label_vocab = spec.labels;
  std::sort(out.corpus.event_vocab.begin(), out.corpus.event_vocab.end());
  std::sort(out.corpus.label_vocab.begin(), out.corpus.label_vocab.end());

  const int width = static_cast<int>(std::to_string(spec.num_examples).size());
  for (std::size_t i = 0; i < spec.num_examples; ++i) {
    const std::size_t e = rng.categorical(event_w);
    const std::string& event = spec.events[e];
    const double r = rng.uniform();
    std::string label = spec.labels[rng.categorical(prior_w[e])];
    std::string trigger;
    bool ambiguous = false;
    if (r < spec.ambiguous_rate) {
      ambiguous = true;
      trigger = pick_word(
          ambiguous_words,
          [&](const std::string& w) { return spec.ambiguous_triggers.at(w).at(event); }, label);
      label = spec.ambiguous_triggers.at(trigger).at(event);
    } else if (r >= spec.ambiguous_rate + spec.prior_only_rate) {
      trigger = pick_word(
          plain_words, [&](const std::string& w) { return spec.unambiguous_triggers.at(w); },
          label);
      label = spec.unambiguous_triggers.at(trigger);
    }
    const auto& templ = spec.templates[rng.below(spec.templates.size())];
    const std::string slot = trigger.empty() ? spec.fillers[rng.below(spec.fillers.size())] : trigger;
    std::string text = render(templ, slot, spec.fillers, rng);

    std::string id = std::to_string(i);
    id = "s" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;
    Example ex{std::move(id), std::move(text), event, std::move(label), ambiguous};
    out.corpus.examples.push_back(std::move(ex));
    out.triggers.push_back(std::move(trigger));
  }

  // Separate stream for the partition so it does not perturb example content.
  Rng split_rng(mix_seed(seed, 0x5b1175));
  std::vector<std::size_t> order(spec.num_examples);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  split_rng.shuffle(std::span<std::size_t>(order));
  const auto n = static_cast<double>(spec.num_examples);
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * n));
  const auto n_dev = static_cast<std::size_t>(std::floor(spec.dev_fraction * n));
  std::vector<SplitPart> part(spec.num_examples, SplitPart::test);
  for (std::size_t k = 0; k < order.size(); ++k)
    part[order[k]] = k < n_train ? SplitPart::train
                     : k < n_train + n_dev ? SplitPart::dev
                                           : SplitPart::test;
  for (std::size_t i = 0; i < spec.num_examples; ++i)
    out.assignment.emplace_back(out.corpus.examples[i].id, part[i]);
  return out;
}

}  // namespace eventaware
