#include "eventaware/model.hpp"

#include <cmath>
#include <numbers>

#include "eventaware/error.hpp"

namespace eventaware {
namespace {

constexpr double kInitStddev = 0.02;
const double kGeluScale = std::sqrt(2.0 / std::numbers::pi);

Matrix normal_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, kInitStddev);
  return m;
}

Matrix zeros(std::size_t rows, std::size_t cols) {
  return Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

// Row-wise layer norm; keeps xhat and 1/sigma for the backward pass.
Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, double eps,
                  Matrix& xhat, Eigen::VectorXd& inv_std) {
  const auto n = x.rows();
  const auto d = static_cast<double>(x.cols());
  xhat.resize(n, x.cols());
  inv_std.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = x.row(i).sum() / d;
    const auto centered = (x.row(i).array() - mean).matrix();
    const double var = centered.squaredNorm() / d;
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = centered * inv_std(i);
  }
  Matrix y = xhat.array().rowwise() * gain.row(0).array();
  y.rowwise() += bias.row(0);
  return y;
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  Matrix mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i)
    mask.data()[i] = rng.uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

void softmax_rows(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.row(i).maxCoeff();
    m.row(i) = (m.row(i).array() - mx).exp();
    m.row(i) /= m.row(i).sum();
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size == 0 || d_model == 0 || n_heads == 0 || n_layers == 0 || d_ff == 0 ||
      max_len == 0 || n_classes == 0 || n_segments == 0)
    throw Error(ErrorKind::config, "model dimensions must all be positive");
  if (d_model % n_heads != 0)
    throw Error(ErrorKind::config, "d_model (" + std::to_string(d_model) +
                                       ") is not divisible by n_heads (" +
                                       std::to_string(n_heads) + ")");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw Error(ErrorKind::config, "dropout_rate must lie in [0, 1)");
  if (!(ln_epsilon > 0.0)) throw Error(ErrorKind::config, "ln_epsilon must be positive");
}

std::size_t ModelConfig::parameter_count() const {
  const std::size_t d = d_model;
  const std::size_t embeddings = (vocab_size + max_len + n_segments) * d;
  const std::size_t attention = 4 * (d * d + d);
  const std::size_t ffn = d * d_ff + d_ff + d_ff * d + d;
  const std::size_t norms = 2 * 2 * d;
  return embeddings + n_layers * (attention + ffn + norms) + d * n_classes + n_classes;
}

Parameters Parameters::zeros(const ModelConfig& c) {
  Parameters p;
  p.token_embeddings = eventaware::zeros(c.vocab_size, c.d_model);
  p.position_embeddings = eventaware::zeros(c.max_len, c.d_model);
  p.segment_embeddings = eventaware::zeros(c.n_segments, c.d_model);
  p.layers.resize(c.n_layers);
  for (auto& l : p.layers) {
    for (Matrix* w : {&l.wq, &l.wk, &l.wv, &l.wo}) *w = eventaware::zeros(c.d_model, c.d_model);
    for (Matrix* b : {&l.bq, &l.bk, &l.bv, &l.bo, &l.ln1_gain, &l.ln1_bias, &l.b2, &l.ln2_gain,
                      &l.ln2_bias})
      *b = eventaware::zeros(1, c.d_model);
    l.w1 = eventaware::zeros(c.d_model, c.d_ff);
    l.b1 = eventaware::zeros(1, c.d_ff);
    l.w2 = eventaware::zeros(c.d_ff, c.d_model);
  }
  p.classifier = eventaware::zeros(c.d_model, c.n_classes);
  p.classifier_bias = eventaware::zeros(1, c.n_classes);
  return p;
}

std::vector<Parameters::Named> Parameters::tensors() {
  std::vector<Named> out{{"token_embeddings", &token_embeddings},
                         {"position_embeddings", &position_embeddings},
                         {"segment_embeddings", &segment_embeddings}};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& l = layers[i];
    const std::string p = "layer" + std::to_string(i) + ".";
    for (auto [name, t] : {std::pair{"wq", &l.wq}, {"bq", &l.bq}, {"wk", &l.wk}, {"bk", &l.bk},
                           {"wv", &l.wv}, {"bv", &l.bv}, {"wo", &l.wo}, {"bo", &l.bo},
                           {"ln1_gain", &l.ln1_gain}, {"ln1_bias", &l.ln1_bias},
                           {"w1", &l.w1}, {"b1", &l.b1}, {"w2", &l.w2}, {"b2", &l.b2},
                           {"ln2_gain", &l.ln2_gain}, {"ln2_bias", &l.ln2_bias}})
      out.push_back({p + name, t});
  }
  out.push_back({"classifier", &classifier});
  out.push_back({"classifier_bias", &classifier_bias});
  return out;
}

std::vector<Parameters::ConstNamed> Parameters::tensors() const {
  std::vector<ConstNamed> out;
  for (auto& [name, t] : const_cast<Parameters*>(this)->tensors()) out.push_back({name, t});
  return out;
}

std::size_t Parameters::size() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += static_cast<std::size_t>(t.tensor->size());
  return n;
}

void Parameters::set_zero() {
  for (auto& t : tensors()) t.tensor->setZero();
}

Model init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model m{config, Parameters::zeros(config)};
  Rng rng(seed);
  for (auto& [name, t] : m.params.tensors()) {
    const bool is_gain = name.ends_with("_gain");
    const bool is_bias = name.ends_with("_bias") || name.ends_with(".bq") ||
                         name.ends_with(".bk") || name.ends_with(".bv") ||
                         name.ends_with(".bo") || name.ends_with(".b1") || name.ends_with(".b2");
    if (is_gain)
      t->setOnes();
    else if (!is_bias)
      *t = normal_matrix(static_cast<std::size_t>(t->rows()), static_cast<std::size_t>(t->cols()), rng);
  }
  return m;
}

AttentionMaps::AttentionMaps(std::size_t n_layers, std::size_t n_heads, std::size_t seq,
                             std::size_t length)
    : n_layers_(n_layers),
      n_heads_(n_heads),
      seq_(seq),
      length_(length),
      data_(n_layers * n_heads * length * length, 0.0) {}

double AttentionMaps::at(std::size_t layer, std::size_t head, std::size_t query,
                         std::size_t key) const {
  if (layer >= n_layers_ || head >= n_heads_ || query >= seq_ || key >= seq_)
    throw Error(ErrorKind::index, "attention index out of range");
  if (query >= length_ || key >= length_) return 0.0;
  return data_[((layer * n_heads_ + head) * length_ + query) * length_ + key];
}

Eigen::Map<const Matrix> AttentionMaps::block(std::size_t layer, std::size_t head) const {
  const auto n = static_cast<Eigen::Index>(length_);
  return {data_.data() + (layer * n_heads_ + head) * length_ * length_, n, n};
}

Eigen::Map<Matrix> AttentionMaps::block(std::size_t layer, std::size_t head) {
  const auto n = static_cast<Eigen::Index>(length_);
  return {data_.data() + (layer * n_heads_ + head) * length_ * length_, n, n};
}

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluScale * (x + 0.044715 * x * x * x)));
}

double gelu_derivative(double x) {
  const double t = std::tanh(kGeluScale * (x + 0.044715 * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluScale * (1.0 + 3.0 * 0.044715 * x * x);
}

namespace detail {

void check_input_shape(const ModelConfig& config, const EncodedInput& input) {
  const auto len = config.max_len;
  if (input.token_ids.size() != len || input.segment_ids.size() != len ||
      input.attention_mask.size() != len)
    throw Error(ErrorKind::shape, "encoded input length " + std::to_string(input.token_ids.size()) +
                                      " does not match model max_len " + std::to_string(len));
  if (input.true_length == 0 || input.true_length > len)
    throw Error(ErrorKind::shape, "true_length out of range");
  for (std::size_t i = 0; i < len; ++i) {
    if (input.attention_mask[i] != (i < input.true_length ? 1 : 0))
      throw Error(ErrorKind::shape, "attention mask must cover exactly the first true_length positions");
    if (i < input.true_length) {
      const auto id = input.token_ids[i];
      const auto seg = input.segment_ids[i];
      if (id < 0 || static_cast<std::size_t>(id) >= config.vocab_size)
        throw Error(ErrorKind::index, "token id " + std::to_string(id) + " outside vocabulary");
      if (seg < 0 || static_cast<std::size_t>(seg) >= config.n_segments)
        throw Error(ErrorKind::index, "segment id " + std::to_string(seg) + " out of range");
    }
  }
}

ExampleTrace trace_example(const Model& model, const EncodedInput& input, Rng* rng) {
  const auto& c = model.config;
  const auto& p = model.params;
  check_input_shape(c, input);
  const auto n = static_cast<Eigen::Index>(input.true_length);
  const auto d = static_cast<Eigen::Index>(c.d_model);
  const auto dh = static_cast<Eigen::Index>(c.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool drop = rng != nullptr && c.dropout_rate > 0.0;

  ExampleTrace tr;
  tr.length = input.true_length;
  // Positions past true_length are never materialized, which is the same as
  // giving padded keys -inf scores: their weight is exactly zero.
  Matrix h(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    h.row(i) = p.token_embeddings.row(input.token_ids[static_cast<std::size_t>(i)]) +
               p.position_embeddings.row(i) +
               p.segment_embeddings.row(input.segment_ids[static_cast<std::size_t>(i)]);
  if (drop) {
    tr.embed_drop = dropout_mask(n, d, c.dropout_rate, *rng);
    h = h.cwiseProduct(tr.embed_drop);
  }

  tr.layers.resize(c.n_layers);
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const auto& w = p.layers[l];
    auto& lt = tr.layers[l];
    lt.input = h;
    lt.q = (h * w.wq).rowwise() + w.bq.row(0);
    lt.k = (h * w.wk).rowwise() + w.bk.row(0);
    lt.v = (h * w.wv).rowwise() + w.bv.row(0);
    lt.context.resize(n, d);
    lt.attn.resize(c.n_heads);
    for (std::size_t hd = 0; hd < c.n_heads; ++hd) {
      const auto off = static_cast<Eigen::Index>(hd) * dh;
      Matrix scores = lt.q.middleCols(off, dh) * lt.k.middleCols(off, dh).transpose() * scale;
      softmax_rows(scores);
      lt.context.middleCols(off, dh) = scores * lt.v.middleCols(off, dh);
      lt.attn[hd] = std::move(scores);
    }
    Matrix attn_out = (lt.context * w.wo).rowwise() + w.bo.row(0);
    if (drop) {
      lt.attn_drop = dropout_mask(n, d, c.dropout_rate, *rng);
      attn_out = attn_out.cwiseProduct(lt.attn_drop);
    }
    lt.h1 = layer_norm(h + attn_out, w.ln1_gain, w.ln1_bias, c.ln_epsilon, lt.xhat1, lt.inv_std1);

    lt.ff_pre = (lt.h1 * w.w1).rowwise() + w.b1.row(0);
    lt.ff_act = lt.ff_pre.unaryExpr([](double x) { return gelu(x); });
    Matrix ff_out = (lt.ff_act * w.w2).rowwise() + w.b2.row(0);
    if (drop) {
      lt.ff_drop = dropout_mask(n, d, c.dropout_rate, *rng);
      ff_out = ff_out.cwiseProduct(lt.ff_drop);
    }
    lt.output = layer_norm(lt.h1 + ff_out, w.ln2_gain, w.ln2_bias, c.ln_epsilon, lt.xhat2, lt.inv_std2);
    h = lt.output;
    if (!h.allFinite())
      throw Error(ErrorKind::numeric, "non-finite activation in encoder layer " + std::to_string(l));
  }

  tr.cls = h.row(0);
  tr.logits = tr.cls * p.classifier + p.classifier_bias;
  const double mx = tr.logits.maxCoeff();
  tr.probs = (tr.logits.array() - mx).exp();
  tr.probs /= tr.probs.sum();
  if (!tr.probs.allFinite()) throw Error(ErrorKind::numeric, "non-finite classifier output");
  return tr;
}

}  // namespace detail

ForwardOutput forward(const Model& model, std::span<const EncodedInput> batch, bool training,
                      std::uint64_t dropout_seed, bool capture_attention) {
  const auto& c = model.config;
  const auto b = static_cast<Eigen::Index>(batch.size());
  ForwardOutput out;
  out.logits.resize(b, static_cast<Eigen::Index>(c.n_classes));
  out.probs.resize(b, static_cast<Eigen::Index>(c.n_classes));
  out.cls_hidden.resize(b, static_cast<Eigen::Index>(c.d_model));
  if (capture_attention) out.attentions.reserve(batch.size());

  for (std::size_t i = 0; i < batch.size(); ++i) {
    Rng rng(mix_seed(dropout_seed, i));
    auto tr = detail::trace_example(model, batch[i], training ? &rng : nullptr);
    const auto row = static_cast<Eigen::Index>(i);
    out.logits.row(row) = tr.logits;
    out.probs.row(row) = tr.probs;
    out.cls_hidden.row(row) = tr.cls;
    if (capture_attention) {
      AttentionMaps maps(c.n_layers, c.n_heads, c.max_len, tr.length);
      for (std::size_t l = 0; l < c.n_layers; ++l)
        for (std::size_t hd = 0; hd < c.n_heads; ++hd) maps.block(l, hd) = tr.layers[l].attn[hd];
      out.attentions.push_back(std::move(maps));
    }
  }
  return out;
}

std::vector<std::size_t> argmax_rows(const Matrix& scores) {
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < scores.cols(); ++j)
      if (scores(i, j) > scores(i, best)) best = j;
    out.push_back(static_cast<std::size_t>(best));
  }
  return out;
}

std::vector<std::size_t> predict(const Model& model, std::span<const EncodedInput> batch) {
  return argmax_rows(forward(model, batch, false, 0, false).logits);
}

RowVector token_embedding(const Model& model, std::int32_t token_id) {
  if (token_id < 0 || static_cast<std::size_t>(token_id) >= model.config.vocab_size)
    throw Error(ErrorKind::index, "token id " + std::to_string(token_id) + " out of range");
  return model.params.token_embeddings.row(token_id);
}

}  // namespace eventaware
