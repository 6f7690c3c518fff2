#include "eventaware/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "eventaware/tokenizer.hpp"

namespace eventaware {

namespace {

LoetoVariant run_variant(const SplitSet& splits, const Vocab& vocab, const LoetoOptions& options,
                         Encoding encoding, const std::vector<std::size_t>& gold) {
  auto trained = train(splits, vocab, options.model, options.train, encoding);
  const auto test = encode_corpus(splits.test, vocab, encoding, trained.model.config.max_len);
  LoetoVariant v;
  v.predictions = predict_all(trained.model, test.inputs);
  v.metrics = evaluate(gold, v.predictions, splits.test.label_vocab, test.events);
  v.history = std::move(trained.history);
  return v;
}

LoetoFoldResult run_fold(const LoetoFold& fold, const LoetoOptions& options) {
  LoetoFoldResult r;
  r.held_out_event = fold.held_out_event;
  r.train_size = fold.splits.train.size();
  r.dev_size = fold.splits.dev.size();
  r.test_size = fold.splits.test.size();
  const auto vocab = build_vocab(fold.splits.train, options.vocab_max_size, options.vocab_min_freq);
  r.vocab_hash = vocab.hash_hex();
  for (const auto& ex : fold.splits.test.examples)
    r.gold.push_back(fold.splits.test.label_index(ex.label));
  r.vanilla = run_variant(fold.splits, vocab, options, Encoding::vanilla, r.gold);
  r.event_aware = run_variant(fold.splits, vocab, options, Encoding::event_aware, r.gold);
  return r;
}

nlohmann::ordered_json metrics_row(const MetricsReport& m) {
  return {{"precision_macro", m.precision_macro},
          {"recall_macro", m.recall_macro},
          {"f1_macro", m.f1_macro},
          {"f1_weighted", m.f1_weighted},
          {"accuracy", m.accuracy},
          {"total", m.total}};
}

}  // namespace

LoetoReport run_loeto(const Corpus& corpus, const LoetoOptions& options) {
  options.train.validate();
  const auto folds = loeto_splits(corpus, options.dev_fraction, options.train.seed);

  LoetoReport report;
  report.folds.resize(folds.size());
  const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, folds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < folds.size(); i = next++) {
      try {
        report.folds[i] = run_fold(folds[i], options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<std::size_t> gold, pred_v, pred_e;
  for (const auto& f : report.folds) {
    gold.insert(gold.end(), f.gold.begin(), f.gold.end());
    pred_v.insert(pred_v.end(), f.vanilla.predictions.begin(), f.vanilla.predictions.end());
    pred_e.insert(pred_e.end(), f.event_aware.predictions.begin(), f.event_aware.predictions.end());
    LoetoEventRow row;
    row.event = f.held_out_event;
    row.support = f.test_size;
    row.vanilla_accuracy = f.vanilla.metrics.accuracy;
    row.event_aware_accuracy = f.event_aware.metrics.accuracy;
    row.delta = row.event_aware_accuracy - row.vanilla_accuracy;
    report.per_event.push_back(row);
  }
  report.vanilla_total = evaluate(gold, pred_v, corpus.label_vocab);
  report.event_aware_total = evaluate(gold, pred_e, corpus.label_vocab);
  return report;
}

nlohmann::ordered_json to_json(const LoetoFoldResult& fold) {
  nlohmann::ordered_json j;
  j["held_out_event"] = fold.held_out_event;
  j["sizes"] = {{"train", fold.train_size}, {"dev", fold.dev_size}, {"test", fold.test_size}};
  j["vocab_hash"] = fold.vocab_hash;
  j["vanilla"] = {{"metrics", to_json(fold.vanilla.metrics)},
                  {"history", to_json(fold.vanilla.history)["payload"]}};
  j["event_aware"] = {{"metrics", to_json(fold.event_aware.metrics)},
                      {"history", to_json(fold.event_aware.history)["payload"]}};
  return j;
}

nlohmann::ordered_json aggregate_to_json(const LoetoReport& report) {
  nlohmann::ordered_json j;
  j["models"] = {{"vanilla", metrics_row(report.vanilla_total)},
                 {"event_aware", metrics_row(report.event_aware_total)}};
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.per_event)
    rows.push_back({{"event", r.event},
                    {"support", r.support},
                    {"vanilla_accuracy", r.vanilla_accuracy},
                    {"event_aware_accuracy", r.event_aware_accuracy},
                    {"delta", r.delta}});
  j["per_event"] = rows;
  return j;
}

}  // namespace eventaware
