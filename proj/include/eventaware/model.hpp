#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eventaware/rng.hpp"
#include "eventaware/tokenizer.hpp"

namespace eventaware {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_layers = 2;
  std::size_t d_ff = 256;
  std::size_t max_len = 128;
  std::size_t n_classes = 0;
  std::size_t n_segments = 2;
  double dropout_rate = 0.1;
  double ln_epsilon = 1e-5;

  /// Throws Error(config) when a dimension is zero or d_model % n_heads != 0.
  void validate() const;
  std::size_t head_dim() const { return d_model / n_heads; }
  std::size_t parameter_count() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct LayerParams {
  Matrix wq, wk, wv, wo;  // d_model x d_model
  Matrix bq, bk, bv, bo;  // 1 x d_model
  Matrix ln1_gain, ln1_bias;
  Matrix w1, b1;  // d_model x d_ff, 1 x d_ff
  Matrix w2, b2;  // d_ff x d_model, 1 x d_model
  Matrix ln2_gain, ln2_bias;
};

/// Every learnable tensor of the encoder-classifier. Also used as the
/// gradient and optimizer-moment container, since the shapes coincide.
struct Parameters {
  Matrix token_embeddings;     // vocab_size x d_model
  Matrix position_embeddings;  // max_len x d_model
  Matrix segment_embeddings;   // n_segments x d_model
  std::vector<LayerParams> layers;
  Matrix classifier;       // d_model x n_classes
  Matrix classifier_bias;  // 1 x n_classes

  static Parameters zeros(const ModelConfig& config);

  struct Named {
    std::string name;
    Matrix* tensor;
  };
  struct ConstNamed {
    std::string name;
    const Matrix* tensor;
  };
  /// Declaration order; the checkpoint format and the optimizer rely on it.
  std::vector<Named> tensors();
  std::vector<ConstNamed> tensors() const;

  std::size_t size() const;
  void set_zero();
};

struct Model {
  ModelConfig config;
  Parameters params;
};

/// Weights ~ N(0, 0.02^2); layer-norm gains 1 and all biases 0.
Model init_model(const ModelConfig& config, std::uint64_t seed);

/// Attention weights of one example, logically n_layers x n_heads x max_len x
/// max_len. Only the true_length x true_length block is stored; every other
/// entry is exactly zero (padded keys receive no weight and padded query rows
/// are not computed).
class AttentionMaps {
 public:
  AttentionMaps() = default;
  AttentionMaps(std::size_t n_layers, std::size_t n_heads, std::size_t seq, std::size_t length);

  double at(std::size_t layer, std::size_t head, std::size_t query, std::size_t key) const;
  Eigen::Map<const Matrix> block(std::size_t layer, std::size_t head) const;
  Eigen::Map<Matrix> block(std::size_t layer, std::size_t head);

  std::size_t n_layers() const { return n_layers_; }
  std::size_t n_heads() const { return n_heads_; }
  std::size_t seq() const { return seq_; }
  std::size_t length() const { return length_; }

 private:
  std::size_t n_layers_ = 0, n_heads_ = 0, seq_ = 0, length_ = 0;
  std::vector<double> data_;
};

struct ForwardOutput {
  Matrix logits;      // batch x n_classes
  Matrix probs;       // batch x n_classes
  Matrix cls_hidden;  // batch x d_model
  std::vector<AttentionMaps> attentions;  // one per batch element
};

/// Dropout is active only when training is set; its masks come from
/// dropout_seed mixed with the batch position.
ForwardOutput forward(const Model& model, std::span<const EncodedInput> batch,
                      bool training = false, std::uint64_t dropout_seed = 0,
                      bool capture_attention = true);

/// Argmax per row, lowest index on ties.
std::vector<std::size_t> argmax_rows(const Matrix& scores);
std::vector<std::size_t> predict(const Model& model, std::span<const EncodedInput> batch);

/// Context-free input embedding of a token.
RowVector token_embedding(const Model& model, std::int32_t token_id);

double gelu(double x);
double gelu_derivative(double x);

// Per-example forward trace with every intermediate needed for backprop.
namespace detail {

struct LayerTrace {
  Matrix input;                // n x d
  Matrix q, k, v;              // n x d
  std::vector<Matrix> attn;    // per head, n x n
  Matrix context;              // n x d
  Matrix attn_drop;            // dropout multipliers, empty when inactive
  Matrix xhat1;                // n x d
  Eigen::VectorXd inv_std1;    // n
  Matrix h1;                   // n x d
  Matrix ff_pre;               // n x d_ff
  Matrix ff_act;               // n x d_ff
  Matrix ff_drop;              // dropout multipliers, empty when inactive
  Matrix xhat2;
  Eigen::VectorXd inv_std2;
  Matrix output;               // n x d
};

struct ExampleTrace {
  std::size_t length = 0;
  Matrix embed_drop;  // empty when inactive
  std::vector<LayerTrace> layers;
  RowVector cls;
  RowVector logits;
  RowVector probs;
};

/// rng == nullptr disables dropout.
ExampleTrace trace_example(const Model& model, const EncodedInput& input, Rng* rng);

void check_input_shape(const ModelConfig& config, const EncodedInput& input);

}  // namespace detail
}  // namespace eventaware
