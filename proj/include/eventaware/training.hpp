#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eventaware/corpus.hpp"
#include "eventaware/metrics.hpp"
#include "eventaware/model.hpp"
#include "eventaware/tokenizer.hpp"
#include "json.hpp"

namespace eventaware {

enum class SelectionMetric { macro_f1, accuracy };

SelectionMetric parse_selection_metric(std::string_view s);
std::string_view to_string(SelectionMetric m);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t max_epochs = 20;
  std::size_t batch_size = 32;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t patience = 3;
  SelectionMetric selection_metric = SelectionMetric::macro_f1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Mean of -ln(max(p[gold], 1e-12)) over the batch.
double cross_entropy(const Matrix& probs, std::span<const std::size_t> gold);

struct LossAndGradients {
  double loss = 0;
  Parameters gradients;
};

/// Exact gradients of the mean cross-entropy over the batch. Dropout is
/// applied when training is set, with the same masks forward() would draw.
LossAndGradients backward(const Model& model, std::span<const EncodedInput> batch,
                          std::span<const std::size_t> gold, bool training = false,
                          std::uint64_t dropout_seed = 0);

/// Loss with dropout disabled.
double batch_loss(const Model& model, std::span<const EncodedInput> batch,
                  std::span<const std::size_t> gold);

struct AdamState {
  Parameters first_moment;
  Parameters second_moment;

  static AdamState zeros_like(const Model& model);
};

/// One bias-corrected Adam update at step t (t >= 1).
void adam_step(Model& model, const Parameters& gradients, AdamState& state, std::size_t t,
               const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double dev_metric = 0;
  double dev_accuracy = 0;
  double dev_f1_macro = 0;
  double wall_seconds = 0;
};

struct TrainHistory {
  SelectionMetric selection_metric = SelectionMetric::macro_f1;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based, 0 when no epoch ran
  bool early_stopped = false;
};

/// Deterministic JSON; wall-clock times go under "metadata" only.
nlohmann::ordered_json to_json(const TrainHistory& h);

struct TrainResult {
  Model model;
  TrainHistory history;
};

/// Encodes every example once, then runs Adam with per-epoch seeded shuffling
/// and early stopping on the dev selection metric. Returns the best epoch's
/// parameters. model_config.vocab_size and n_classes are filled in when zero.
TrainResult train(const SplitSet& splits, const Vocab& vocab, ModelConfig model_config,
                  const TrainConfig& train_config, Encoding encoding);

/// Encoded inputs and gold indices for a corpus.
struct EncodedSet {
  std::vector<EncodedInput> inputs;
  std::vector<std::size_t> gold;
  std::vector<std::string> events;
};

EncodedSet encode_corpus(const Corpus& corpus, const Vocab& vocab, Encoding encoding,
                         std::size_t max_len);

/// Predictions in chunks to bound memory.
std::vector<std::size_t> predict_all(const Model& model, const std::vector<EncodedInput>& inputs);

struct TensorCheck {
  std::string name;
  double max_relative_error = 0;
  double analytic = 0;  // at the worst coordinate
  double numeric = 0;
};

struct GradCheckReport {
  double max_relative_error = 0;
  std::vector<TensorCheck> tensors;
};

/// Central finite differences on sampled coordinates of every tensor;
/// relative error |a - n| / max(|a|, |n|, 1e-8). Embedding tables are
/// sampled from the rows the batch touches.
GradCheckReport grad_check(const Model& model, std::span<const EncodedInput> batch,
                           std::span<const std::size_t> gold, double epsilon = 1e-4,
                           std::size_t samples_per_tensor = 8, std::uint64_t seed = 0);

}  // namespace eventaware
