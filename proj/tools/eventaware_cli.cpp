// Command-line driver: synthetic corpus generation, vocabulary, training,
// evaluation, leave-one-event-type-out sweeps and analyses.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "eventaware/analysis.hpp"
#include "eventaware/checkpoint.hpp"
#include "eventaware/corpus.hpp"
#include "eventaware/error.hpp"
#include "eventaware/experiment.hpp"
#include "eventaware/synthetic.hpp"
#include "eventaware/tokenizer.hpp"
#include "eventaware/training.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace eventaware;

namespace {

struct RunConfig {
  // paths
  std::string spec;
  std::string corpus;
  std::string splits;
  std::string vocab;
  std::string checkpoint;
  std::string out = ".";
  std::uint64_t seed = 0;

  // data
  std::string encoding = "event";
  std::string split;
  std::size_t vocab_max_size = 30000;
  std::size_t vocab_min_freq = 1;
  double dev_fraction = 0.25;

  // model
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_layers = 2;
  std::size_t d_ff = 256;
  std::size_t max_len = 128;
  double dropout = 0.1;

  // training
  double learning_rate = 1e-3;
  std::size_t max_epochs = 20;
  std::size_t batch_size = 32;
  std::size_t patience = 3;
  std::string selection_metric = "macro_f1";

  // analysis
  std::string mode = "distributions";
  double threshold = 0.5;
  std::size_t top_k = 50;
  std::size_t clusters = 5;
  std::size_t kmeans_iters = 100;
  std::string direction = "text_to_event";
  double smoothing = 1e-6;
};

template <typename T>
void take(const nlohmann::json& j, const char* key, T& field, std::set<std::string>& seen) {
  if (!j.contains(key)) return;
  seen.insert(key);
  try {
    field = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("config key '") + key + "': " + e.what());
  }
}

void apply_config_file(const std::string& path, RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::config, "config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::config, "config file must hold a JSON object");
  std::set<std::string> seen;
  take(j, "spec", c.spec, seen);
  take(j, "corpus", c.corpus, seen);
  take(j, "splits", c.splits, seen);
  take(j, "vocab", c.vocab, seen);
  take(j, "checkpoint", c.checkpoint, seen);
  take(j, "out", c.out, seen);
  take(j, "seed", c.seed, seen);
  take(j, "encoding", c.encoding, seen);
  take(j, "split", c.split, seen);
  take(j, "vocab_max_size", c.vocab_max_size, seen);
  take(j, "vocab_min_freq", c.vocab_min_freq, seen);
  take(j, "dev_fraction", c.dev_fraction, seen);
  take(j, "d_model", c.d_model, seen);
  take(j, "n_heads", c.n_heads, seen);
  take(j, "n_layers", c.n_layers, seen);
  take(j, "d_ff", c.d_ff, seen);
  take(j, "max_len", c.max_len, seen);
  take(j, "dropout", c.dropout, seen);
  take(j, "learning_rate", c.learning_rate, seen);
  take(j, "max_epochs", c.max_epochs, seen);
  take(j, "batch_size", c.batch_size, seen);
  take(j, "patience", c.patience, seen);
  take(j, "selection_metric", c.selection_metric, seen);
  take(j, "mode", c.mode, seen);
  take(j, "threshold", c.threshold, seen);
  take(j, "top_k", c.top_k, seen);
  take(j, "clusters", c.clusters, seen);
  take(j, "kmeans_iters", c.kmeans_iters, seen);
  take(j, "direction", c.direction, seen);
  take(j, "smoothing", c.smoothing, seen);
  for (const auto& [key, value] : j.items())
    if (!seen.count(key)) throw Error(ErrorKind::config, "unknown config key '" + key + "'");
}

// --config must be known before the options are bound so that the file
// supplies defaults and explicit flags still win.
std::string find_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

ModelConfig model_config(const RunConfig& c) {
  ModelConfig m;
  m.d_model = c.d_model;
  m.n_heads = c.n_heads;
  m.n_layers = c.n_layers;
  m.d_ff = c.d_ff;
  m.max_len = c.max_len;
  m.dropout_rate = c.dropout;
  return m;
}

TrainConfig train_config(const RunConfig& c) {
  TrainConfig t;
  t.learning_rate = c.learning_rate;
  t.max_epochs = c.max_epochs;
  t.batch_size = c.batch_size;
  t.patience = c.patience;
  t.selection_metric = parse_selection_metric(c.selection_metric);
  t.seed = c.seed;
  t.validate();
  return t;
}

json config_echo(const RunConfig& c) {
  return {{"encoding", std::string(to_string(parse_encoding(c.encoding)))},
          {"seed", c.seed},
          {"vocab_max_size", c.vocab_max_size},
          {"vocab_min_freq", c.vocab_min_freq},
          {"model",
           {{"d_model", c.d_model},
            {"n_heads", c.n_heads},
            {"n_layers", c.n_layers},
            {"d_ff", c.d_ff},
            {"max_len", c.max_len},
            {"dropout", c.dropout}}},
          {"train",
           {{"learning_rate", c.learning_rate},
            {"max_epochs", c.max_epochs},
            {"batch_size", c.batch_size},
            {"patience", c.patience},
            {"selection_metric", c.selection_metric}}}};
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorKind::config, std::string(flag) + " is required");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

fs::path prepare_out(const RunConfig& c) {
  fs::path out(c.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create output directory " + out.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorKind::io, "write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json envelope(const std::string& schema, json payload, json metadata) {
  json j;
  j["schema"] = "eventaware." + schema;
  j["schema_version"] = 1;
  j["payload"] = std::move(payload);
  j["metadata"] = std::move(metadata);
  return j;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

SplitSet load_splits(const RunConfig& c) {
  require(c.corpus, "--corpus");
  require(c.splits, "--splits");
  return split_official(load_corpus(c.corpus), load_split_assignments(c.splits));
}

// The named part of the corpus; "all" (or no splits file) means every example.
Corpus select_part(const RunConfig& c, const std::string& part) {
  require(c.corpus, "--corpus");
  auto corpus = load_corpus(c.corpus);
  if (part == "all") return corpus;
  require(c.splits, "--splits");
  const auto s = split_official(corpus, load_split_assignments(c.splits));
  switch (parse_split_part(part)) {
    case SplitPart::train: return s.train;
    case SplitPart::dev: return s.dev;
    case SplitPart::test: return s.test;
  }
  return s.test;
}

// --------------------------------------------------------------------------

int cmd_gen_synth(const RunConfig& c) {
  require(c.spec, "--spec");
  Stopwatch clock;
  const auto spec_text = read_file(c.spec);
  const auto spec = parse_synth_spec(spec_text);
  const auto synth = generate_synthetic(spec, c.seed);
  const auto out = prepare_out(c);
  save_corpus(out / "corpus.tsv", synth.corpus);
  save_split_assignments(out / "splits.tsv", synth.assignment);

  std::ostringstream tags;
  tags << "id\tambiguous\ttrigger\n";
  for (std::size_t i = 0; i < synth.corpus.size(); ++i)
    tags << synth.corpus.examples[i].id << '\t' << (synth.corpus.examples[i].ambiguous ? 1 : 0)
         << '\t' << synth.triggers[i] << '\n';
  write_text(out / "tags.tsv", tags.str());

  std::map<std::string, std::size_t> split_sizes;
  for (const auto& [id, part] : synth.assignment) ++split_sizes[std::string(to_string(part))];
  std::size_t ambiguous = 0;
  for (const auto& ex : synth.corpus.examples) ambiguous += ex.ambiguous ? 1 : 0;
  json payload = {{"spec_fnv1a64", fnv1a_hex(spec_text)},
                  {"seed", c.seed},
                  {"num_examples", synth.corpus.size()},
                  {"ambiguous_examples", ambiguous},
                  {"events", synth.corpus.event_vocab},
                  {"labels", synth.corpus.label_vocab},
                  {"split_sizes", split_sizes},
                  {"corpus_fnv1a64", fnv1a_hex(read_file(out / "corpus.tsv"))}};
  write_json(out / "gen_synth.json", envelope("gen_synth", std::move(payload),
                                              {{"wall_seconds", clock.seconds()}}));
  std::cout << "wrote " << synth.corpus.size() << " examples to " << (out / "corpus.tsv").string()
            << '\n';
  return 0;
}

int cmd_build_vocab(const RunConfig& c) {
  const auto source = c.splits.empty() ? load_corpus(c.corpus) : load_splits(c).train;
  const auto vocab = build_vocab(source, c.vocab_max_size, c.vocab_min_freq);
  const auto out = prepare_out(c);
  vocab.save(out / "vocab.txt");
  std::cout << "vocabulary of " << vocab.size() << " tokens, hash " << vocab.hash_hex() << '\n';
  return 0;
}

int cmd_train(const RunConfig& c) {
  Stopwatch clock;
  const auto encoding = parse_encoding(c.encoding);
  const auto tcfg = train_config(c);
  const auto splits = load_splits(c);
  const auto vocab = c.vocab.empty() ? build_vocab(splits.train, c.vocab_max_size, c.vocab_min_freq)
                                     : Vocab::load(c.vocab);
  const auto result = train(splits, vocab, model_config(c), tcfg, encoding);

  const auto out = prepare_out(c);
  vocab.save(out / "vocab.txt");
  CheckpointMeta meta{result.model.config, encoding, vocab.hash_hex(),
                      splits.train.label_vocab, splits.train.event_vocab};
  save_checkpoint(out / "model.bin", result.model, meta);

  auto history = to_json(result.history);
  history["payload"]["config"] = config_echo(c);
  history["payload"]["vocab_hash"] = vocab.hash_hex();
  history["payload"]["model_fnv1a64"] = fnv1a_hex(read_file(out / "model.bin"));
  history["metadata"]["total_wall_seconds"] = clock.seconds();
  write_json(out / "history.json", history);

  const auto& best = result.history.epochs.at(result.history.best_epoch - 1);
  std::cout << to_string(encoding) << " model: best epoch " << result.history.best_epoch << " of "
            << result.history.epochs.size() << ", dev " << to_string(tcfg.selection_metric) << ' '
            << best.dev_metric << '\n';
  return 0;
}

int cmd_eval(const RunConfig& c) {
  require(c.checkpoint, "--checkpoint");
  Stopwatch clock;
  const auto loaded = load_checkpoint(c.checkpoint);
  const fs::path vocab_path =
      c.vocab.empty() ? fs::path(c.checkpoint).parent_path() / "vocab.txt" : fs::path(c.vocab);
  const auto vocab = Vocab::load(vocab_path);
  if (vocab.hash_hex() != loaded.meta.vocab_hash)
    throw Error(ErrorKind::compatibility, "vocabulary hash " + vocab.hash_hex() +
                                              " does not match checkpoint " + loaded.meta.vocab_hash);
  const std::string part = c.split.empty() ? (c.splits.empty() ? "all" : "test") : c.split;
  Corpus data;
  try {
    data = select_part(c, part);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::empty_corpus) throw;
    throw Error(ErrorKind::empty_evaluation, std::string("nothing to evaluate: ") + e.what());
  }
  if (data.empty()) throw Error(ErrorKind::empty_evaluation, "no examples to evaluate");

  // Gold labels are indexed in the checkpoint's label order.
  Corpus relabelled = data;
  relabelled.label_vocab = loaded.meta.labels;
  const auto encoded =
      encode_corpus(relabelled, vocab, loaded.meta.encoding, loaded.model.config.max_len);
  const auto preds = predict_all(loaded.model, encoded.inputs);
  const auto metrics = evaluate(encoded.gold, preds, loaded.meta.labels, encoded.events);

  const auto out = prepare_out(c);
  json payload = to_json(metrics);
  payload["encoding"] = std::string(to_string(loaded.meta.encoding));
  payload["split"] = part;
  write_json(out / "metrics.json",
             envelope("metrics", std::move(payload), {{"wall_seconds", clock.seconds()}}));
  std::cout << render_table({{std::string(to_string(loaded.meta.encoding)), metrics}});
  return 0;
}

std::size_t thread_budget() {
  if (const char* env = std::getenv("EVENTAWARE_THREADS")) {
    try {
      const auto n = std::stoul(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::config, "EVENTAWARE_THREADS must be a positive integer");
  }
  return 1;
}

int cmd_loeto(const RunConfig& c) {
  require(c.corpus, "--corpus");
  Stopwatch clock;
  const auto corpus = load_corpus(c.corpus);
  LoetoOptions options;
  options.dev_fraction = c.dev_fraction;
  options.vocab_max_size = c.vocab_max_size;
  options.vocab_min_freq = c.vocab_min_freq;
  options.model = model_config(c);
  options.train = train_config(c);
  options.threads = thread_budget();
  const auto report = run_loeto(corpus, options);

  const auto out = prepare_out(c);
  for (std::size_t i = 0; i < report.folds.size(); ++i) {
    const auto& fold = report.folds[i];
    std::string dir_name = "fold_" + std::to_string(i) + "_" + fold.held_out_event;
    for (auto& ch : dir_name)
      if (ch == ' ' || ch == '/') ch = '_';
    const auto dir = out / dir_name;
    fs::create_directories(dir);
    write_json(dir / "report.json", envelope("loeto_fold", to_json(fold), json::object()));
  }
  json payload = aggregate_to_json(report);
  payload["config"] = config_echo(c);
  payload["dev_fraction"] = c.dev_fraction;
  write_json(out / "aggregate.json",
             envelope("loeto_aggregate", std::move(payload),
                      {{"wall_seconds", clock.seconds()}, {"threads", options.threads}}));

  std::cout << render_table({{"vanilla", report.vanilla_total},
                             {"event_aware", report.event_aware_total}});
  for (const auto& row : report.per_event) {
    char line[256];
    std::snprintf(line, sizeof line, "%-24s %6.1f %6.1f %+6.1f\n", row.event.c_str(),
                  100 * row.vanilla_accuracy, 100 * row.event_aware_accuracy, 100 * row.delta);
    std::cout << line;
  }
  return 0;
}

LoadedCheckpoint load_event_aware(const RunConfig& c, Vocab& vocab) {
  require(c.checkpoint, "--checkpoint");
  auto loaded = load_checkpoint(c.checkpoint);
  if (loaded.meta.encoding != Encoding::event_aware)
    throw Error(ErrorKind::mode, "mode '" + c.mode + "' needs an event-aware checkpoint");
  const fs::path vocab_path =
      c.vocab.empty() ? fs::path(c.checkpoint).parent_path() / "vocab.txt" : fs::path(c.vocab);
  vocab = Vocab::load(vocab_path);
  if (vocab.hash_hex() != loaded.meta.vocab_hash)
    throw Error(ErrorKind::compatibility, "vocabulary does not match checkpoint");
  return loaded;
}

int cmd_analyze(const RunConfig& c) {
  Stopwatch clock;
  const auto out = prepare_out(c);
  json payload;
  payload["mode"] = c.mode;

  if (c.mode == "distributions") {
    const std::string part = c.split.empty() ? "all" : c.split;
    payload["split"] = part;
    payload["distributions"] = to_json(distributions_by_event(select_part(c, part)));
  } else if (c.mode == "kl") {
    Vocab vocab;
    const auto loaded = load_event_aware(c, vocab);
    const std::string part = c.split.empty() ? "test" : c.split;
    auto data = select_part(c, part);
    data.label_vocab = loaded.meta.labels;
    payload["split"] = part;
    payload["kl"] = to_json(distribution_shift_report(loaded.model, data, vocab, c.smoothing));
  } else if (c.mode == "attention") {
    Vocab vocab;
    const auto loaded = load_event_aware(c, vocab);
    const std::string part = c.split.empty() ? "all" : c.split;
    const auto data = select_part(c, part);
    const auto counts = attention_link_counts(loaded.model, data, vocab, default_stopwords(),
                                              c.threshold, parse_link_direction(c.direction));
    const auto top = tfidf_top_k(counts, c.top_k);
    json ranked = json::object();
    json clusters = json::object();
    for (const auto& [event, tokens] : top) {
      auto list = json::array();
      std::vector<std::string> names;
      for (const auto& t : tokens) {
        list.push_back({{"token", t.token}, {"score", t.score}});
        names.push_back(t.token);
      }
      ranked[event] = list;
      const auto report = cluster_tokens(loaded.model, names, vocab, c.clusters, c.seed, c.kmeans_iters);
      clusters[event] = to_json(report);
      std::string dot_name = "clusters_" + event;
      for (auto& ch : dot_name)
        if (ch == ' ' || ch == '/') ch = '_';
      write_text(out / (dot_name + ".dot"), to_dot(event, report));
    }
    payload["split"] = part;
    payload["top_k"] = c.top_k;
    payload["clusters_requested"] = c.clusters;
    payload["seed"] = c.seed;
    payload["counts"] = to_json(counts);
    payload["tfidf"] = ranked;
    payload["clusters"] = clusters;
  } else {
    throw Error(ErrorKind::config, "unknown analysis mode '" + c.mode + "'");
  }

  write_json(out / ("analysis_" + c.mode + ".json"),
             envelope("analysis", std::move(payload), {{"wall_seconds", clock.seconds()}}));
  std::cout << "wrote " << (out / ("analysis_" + c.mode + ".json")).string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  try {
    if (const auto path = find_config_path(argc, argv); !path.empty()) apply_config_file(path, cfg);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code_for(e.kind());
  }

  CLI::App app{"Event-aware crisis tweet classification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON file supplying option defaults");
  app.add_option("--seed", cfg.seed, "Seed for every stochastic step")->capture_default_str();
  app.add_option("--out", cfg.out, "Output directory")->capture_default_str();

  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic corpus from a JSON spec");
  gen->add_option("--spec", cfg.spec, "Generator spec (JSON)");

  auto add_data = [&](CLI::App* sub) {
    sub->add_option("--corpus", cfg.corpus, "Corpus TSV (id, event, label, text)");
    sub->add_option("--splits", cfg.splits, "Split assignment TSV (id, split)");
  };
  auto add_vocab = [&](CLI::App* sub) {
    sub->add_option("--vocab-max-size", cfg.vocab_max_size)->capture_default_str();
    sub->add_option("--vocab-min-freq", cfg.vocab_min_freq)->capture_default_str();
  };
  auto add_model_train = [&](CLI::App* sub) {
    sub->add_option("--d-model", cfg.d_model)->capture_default_str();
    sub->add_option("--heads", cfg.n_heads)->capture_default_str();
    sub->add_option("--layers", cfg.n_layers)->capture_default_str();
    sub->add_option("--d-ff", cfg.d_ff)->capture_default_str();
    sub->add_option("--max-len", cfg.max_len)->capture_default_str();
    sub->add_option("--dropout", cfg.dropout)->capture_default_str();
    sub->add_option("--lr", cfg.learning_rate)->capture_default_str();
    sub->add_option("--epochs", cfg.max_epochs)->capture_default_str();
    sub->add_option("--batch-size", cfg.batch_size)->capture_default_str();
    sub->add_option("--patience", cfg.patience)->capture_default_str();
    sub->add_option("--selection-metric", cfg.selection_metric, "macro_f1 or accuracy")
        ->capture_default_str();
  };

  auto* vocab_cmd = app.add_subcommand("build-vocab", "Build a vocabulary from the training split");
  add_data(vocab_cmd);
  add_vocab(vocab_cmd);

  auto* train_cmd = app.add_subcommand("train", "Train a vanilla or event-aware classifier");
  add_data(train_cmd);
  add_vocab(train_cmd);
  add_model_train(train_cmd);
  train_cmd->add_option("--encoding", cfg.encoding, "vanilla or event")->capture_default_str();
  train_cmd->add_option("--vocab", cfg.vocab, "Existing vocabulary (built from train otherwise)");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_data(eval_cmd);
  eval_cmd->add_option("--checkpoint", cfg.checkpoint, "Model file written by train");
  eval_cmd->add_option("--vocab", cfg.vocab, "Vocabulary (defaults to the checkpoint's)");
  eval_cmd->add_option("--split", cfg.split, "train, dev, test or all");

  auto* loeto_cmd = app.add_subcommand("loeto", "Leave-one-event-type-out sweep, both variants");
  loeto_cmd->add_option("--corpus", cfg.corpus, "Corpus TSV");
  loeto_cmd->add_option("--dev-fraction", cfg.dev_fraction, "Held-out share used as dev")
      ->capture_default_str();
  add_vocab(loeto_cmd);
  add_model_train(loeto_cmd);

  auto* analyze_cmd = app.add_subcommand("analyze", "Label distributions, KL shift or attention links");
  add_data(analyze_cmd);
  analyze_cmd->add_option("--mode", cfg.mode, "distributions, kl or attention")->capture_default_str();
  analyze_cmd->add_option("--checkpoint", cfg.checkpoint, "Event-aware model file");
  analyze_cmd->add_option("--vocab", cfg.vocab, "Vocabulary (defaults to the checkpoint's)");
  analyze_cmd->add_option("--split", cfg.split, "train, dev, test or all");
  analyze_cmd->add_option("--threshold", cfg.threshold)->capture_default_str();
  analyze_cmd->add_option("--top-k", cfg.top_k)->capture_default_str();
  analyze_cmd->add_option("--clusters", cfg.clusters)->capture_default_str();
  analyze_cmd->add_option("--kmeans-iters", cfg.kmeans_iters)->capture_default_str();
  analyze_cmd->add_option("--direction", cfg.direction, "text_to_event, event_to_text or either")
      ->capture_default_str();
  analyze_cmd->add_option("--smoothing", cfg.smoothing)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_synth(cfg);
    if (vocab_cmd->parsed()) return cmd_build_vocab(cfg);
    if (train_cmd->parsed()) return cmd_train(cfg);
    if (eval_cmd->parsed()) return cmd_eval(cfg);
    if (loeto_cmd->parsed()) return cmd_loeto(cfg);
    if (analyze_cmd->parsed()) return cmd_analyze(cfg);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error [io]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
