#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eventaware/corpus.hpp"
#include "eventaware/metrics.hpp"
#include "eventaware/model.hpp"
#include "eventaware/training.hpp"
#include "json.hpp"

namespace eventaware {

struct LoetoOptions {
  double dev_fraction = 0.25;
  std::size_t vocab_max_size = 30000;
  std::size_t vocab_min_freq = 1;
  ModelConfig model;
  TrainConfig train;
  std::size_t threads = 1;  // folds trained concurrently
};

struct LoetoVariant {
  MetricsReport metrics;
  TrainHistory history;
  std::vector<std::size_t> predictions;
};

struct LoetoFoldResult {
  std::string held_out_event;
  std::size_t train_size = 0, dev_size = 0, test_size = 0;
  std::string vocab_hash;
  std::vector<std::size_t> gold;
  LoetoVariant vanilla;
  LoetoVariant event_aware;
};

struct LoetoEventRow {
  std::string event;
  std::size_t support = 0;
  double vanilla_accuracy = 0;
  double event_aware_accuracy = 0;
  double delta = 0;  // event_aware - vanilla
};

struct LoetoReport {
  std::vector<LoetoFoldResult> folds;
  // Pooled over every fold's test predictions.
  MetricsReport vanilla_total;
  MetricsReport event_aware_total;
  std::vector<LoetoEventRow> per_event;
};

/// Trains a vanilla and an event-aware model per held-out event with
/// identical splits, vocabulary and seeds, and aggregates their test results.
LoetoReport run_loeto(const Corpus& corpus, const LoetoOptions& options);

nlohmann::ordered_json to_json(const LoetoFoldResult& fold);
/// Aggregate only: both model rows plus the per-event accuracy table.
nlohmann::ordered_json aggregate_to_json(const LoetoReport& report);

}  // namespace eventaware
