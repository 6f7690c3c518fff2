#include "eventaware/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "eventaware/diagnostics.hpp"
#include "eventaware/error.hpp"
#include "eventaware/rng.hpp"

namespace eventaware {
namespace {

constexpr double kProbFloor = 1e-12;

// dL/dx for y = xhat * gain + bias, xhat = (x - mean) * inv_std, row-wise.
Matrix layer_norm_backward(const Matrix& dy, const Matrix& xhat, const Eigen::VectorXd& inv_std,
                           const Matrix& gain, Matrix& dgain, Matrix& dbias) {
  dgain.row(0) += (dy.cwiseProduct(xhat)).colwise().sum();
  dbias.row(0) += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gain.row(0).array();
  const double d = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double mean_dxhat = dxhat.row(i).sum() / d;
    const double mean_dxhat_xhat = dxhat.row(i).dot(xhat.row(i)) / d;
    dx.row(i) = inv_std(i) * (dxhat.row(i).array() - mean_dxhat - xhat.row(i).array() * mean_dxhat_xhat).matrix();
  }
  return dx;
}

void accumulate_example(const Model& model, const EncodedInput& input,
                        const detail::ExampleTrace& tr, std::size_t gold, double weight,
                        Parameters& g) {
  const auto& c = model.config;
  const auto& p = model.params;
  const auto n = static_cast<Eigen::Index>(tr.length);
  const auto d = static_cast<Eigen::Index>(c.d_model);
  const auto dh = static_cast<Eigen::Index>(c.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // Softmax + clamped NLL. Below the clamp the loss is flat in the logits.
  RowVector dlogits = RowVector::Zero(static_cast<Eigen::Index>(c.n_classes));
  if (tr.probs(static_cast<Eigen::Index>(gold)) >= kProbFloor) {
    dlogits = tr.probs * weight;
    dlogits(static_cast<Eigen::Index>(gold)) -= weight;
  }
  g.classifier += tr.cls.transpose() * dlogits;
  g.classifier_bias.row(0) += dlogits;

  Matrix dh_mat = Matrix::Zero(n, d);
  dh_mat.row(0) = dlogits * p.classifier.transpose();

  for (std::size_t li = c.n_layers; li-- > 0;) {
    const auto& w = p.layers[li];
    auto& gw = g.layers[li];
    const auto& lt = tr.layers[li];

    // Second residual block: output = LN2(h1 + drop(gelu(h1 W1 + b1) W2 + b2)).
    const Matrix dr2 = layer_norm_backward(dh_mat, lt.xhat2, lt.inv_std2, w.ln2_gain, gw.ln2_gain, gw.ln2_bias);
    Matrix dff_out = dr2;
    if (lt.ff_drop.size() > 0) dff_out = dff_out.cwiseProduct(lt.ff_drop);
    gw.w2 += lt.ff_act.transpose() * dff_out;
    gw.b2.row(0) += dff_out.colwise().sum();
    Matrix dff_pre = dff_out * w.w2.transpose();
    dff_pre = dff_pre.cwiseProduct(lt.ff_pre.unaryExpr([](double x) { return gelu_derivative(x); }));
    gw.w1 += lt.h1.transpose() * dff_pre;
    gw.b1.row(0) += dff_pre.colwise().sum();
    const Matrix dh1 = dr2 + dff_pre * w.w1.transpose();

    // First residual block: h1 = LN1(x + drop(attention(x) Wo + bo)).
    const Matrix dr1 = layer_norm_backward(dh1, lt.xhat1, lt.inv_std1, w.ln1_gain, gw.ln1_gain, gw.ln1_bias);
    Matrix dattn_out = dr1;
    if (lt.attn_drop.size() > 0) dattn_out = dattn_out.cwiseProduct(lt.attn_drop);
    gw.wo += lt.context.transpose() * dattn_out;
    gw.bo.row(0) += dattn_out.colwise().sum();
    const Matrix dcontext = dattn_out * w.wo.transpose();

    Matrix dq(n, d), dk(n, d), dv(n, d);
    for (std::size_t hd = 0; hd < c.n_heads; ++hd) {
      const auto off = static_cast<Eigen::Index>(hd) * dh;
      const Matrix& a = lt.attn[hd];
      const auto dctx = dcontext.middleCols(off, dh);
      const Matrix da = dctx * lt.v.middleCols(off, dh).transpose();
      dv.middleCols(off, dh) = a.transpose() * dctx;
      // Softmax Jacobian applied row-wise.
      const Eigen::VectorXd row_dot = (da.cwiseProduct(a)).rowwise().sum();
      const Matrix ds = a.cwiseProduct(da.colwise() - row_dot) * scale;
      dq.middleCols(off, dh) = ds * lt.k.middleCols(off, dh);
      dk.middleCols(off, dh) = ds.transpose() * lt.q.middleCols(off, dh);
    }
    gw.wq += lt.input.transpose() * dq;
    gw.wk += lt.input.transpose() * dk;
    gw.wv += lt.input.transpose() * dv;
    gw.bq.row(0) += dq.colwise().sum();
    gw.bk.row(0) += dk.colwise().sum();
    gw.bv.row(0) += dv.colwise().sum();
    dh_mat = dr1 + dq * w.wq.transpose() + dk * w.wk.transpose() + dv * w.wv.transpose();
    if (!dh_mat.allFinite())
      throw Error(ErrorKind::numeric, "non-finite gradient in encoder layer " + std::to_string(li));
  }

  if (tr.embed_drop.size() > 0) dh_mat = dh_mat.cwiseProduct(tr.embed_drop);
  for (Eigen::Index i = 0; i < n; ++i) {
    g.token_embeddings.row(input.token_ids[static_cast<std::size_t>(i)]) += dh_mat.row(i);
    g.position_embeddings.row(i) += dh_mat.row(i);
    g.segment_embeddings.row(input.segment_ids[static_cast<std::size_t>(i)]) += dh_mat.row(i);
  }
}

void check_gold(std::span<const std::size_t> gold, std::size_t batch, std::size_t n_classes) {
  if (gold.size() != batch) throw Error(ErrorKind::shape, "gold labels do not match batch size");
  for (auto gi : gold)
    if (gi >= n_classes)
      throw Error(ErrorKind::index, "gold label index " + std::to_string(gi) + " out of range");
}

double metric_of(const MetricsReport& r, SelectionMetric m) {
  return m == SelectionMetric::macro_f1 ? r.f1_macro : r.accuracy;
}

}  // namespace

SelectionMetric parse_selection_metric(std::string_view s) {
  if (s == "macro_f1") return SelectionMetric::macro_f1;
  if (s == "accuracy") return SelectionMetric::accuracy;
  throw Error(ErrorKind::parameter, "unknown selection metric '" + std::string(s) + "'");
}

std::string_view to_string(SelectionMetric m) {
  return m == SelectionMetric::macro_f1 ? "macro_f1" : "accuracy";
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::config, "learning_rate must be positive");
  if (max_epochs < 1) throw Error(ErrorKind::config, "max_epochs must be at least 1");
  if (batch_size < 1) throw Error(ErrorKind::config, "batch_size must be at least 1");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1))
    throw Error(ErrorKind::config, "Adam betas must lie in [0, 1)");
  if (!(adam_epsilon > 0)) throw Error(ErrorKind::config, "adam_epsilon must be positive");
}

double cross_entropy(const Matrix& probs, std::span<const std::size_t> gold) {
  check_gold(gold, static_cast<std::size_t>(probs.rows()), static_cast<std::size_t>(probs.cols()));
  if (gold.empty()) return 0.0;
  double total = 0;
  for (std::size_t i = 0; i < gold.size(); ++i)
    total -= std::log(std::max(probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(gold[i])), kProbFloor));
  return total / static_cast<double>(gold.size());
}

LossAndGradients backward(const Model& model, std::span<const EncodedInput> batch,
                          std::span<const std::size_t> gold, bool training,
                          std::uint64_t dropout_seed) {
  check_gold(gold, batch.size(), model.config.n_classes);
  LossAndGradients out{0.0, Parameters::zeros(model.config)};
  if (batch.empty()) return out;
  const double weight = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Rng rng(mix_seed(dropout_seed, i));
    const auto tr = detail::trace_example(model, batch[i], training ? &rng : nullptr);
    out.loss -= weight * std::log(std::max(tr.probs(static_cast<Eigen::Index>(gold[i])), kProbFloor));
    accumulate_example(model, batch[i], tr, gold[i], weight, out.gradients);
  }
  return out;
}

double batch_loss(const Model& model, std::span<const EncodedInput> batch,
                  std::span<const std::size_t> gold) {
  return cross_entropy(forward(model, batch, false, 0, false).probs, gold);
}

AdamState AdamState::zeros_like(const Model& model) {
  return {Parameters::zeros(model.config), Parameters::zeros(model.config)};
}

void adam_step(Model& model, const Parameters& gradients, AdamState& state, std::size_t t,
               const TrainConfig& cfg) {
  if (t < 1) throw Error(ErrorKind::parameter, "Adam step counter starts at 1");
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  auto params = model.params.tensors();
  const auto grads = gradients.tensors();
  auto m = state.first_moment.tensors();
  auto v = state.second_moment.tensors();
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size())
    throw Error(ErrorKind::shape, "optimizer state does not match model parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& theta = *params[i].tensor;
    const auto& g = *grads[i].tensor;
    auto& mi = *m[i].tensor;
    auto& vi = *v[i].tensor;
    if (g.rows() != theta.rows() || g.cols() != theta.cols())
      throw Error(ErrorKind::shape, "gradient shape mismatch for " + params[i].name);
    mi = b1 * mi + (1.0 - b1) * g;
    vi = b2 * vi + (1.0 - b2) * g.cwiseProduct(g);
    theta.array() -= cfg.learning_rate * (mi.array() / c1) / ((vi.array() / c2).sqrt() + cfg.adam_epsilon);
  }
}

nlohmann::ordered_json to_json(const TrainHistory& h) {
  nlohmann::ordered_json payload;
  payload["selection_metric"] = std::string(to_string(h.selection_metric));
  payload["best_epoch"] = h.best_epoch;
  payload["early_stopped"] = h.early_stopped;
  auto& epochs = payload["epochs"] = nlohmann::ordered_json::array();
  auto wall = nlohmann::ordered_json::array();
  for (const auto& e : h.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"dev_metric", e.dev_metric},
                      {"dev_accuracy", e.dev_accuracy},
                      {"dev_f1_macro", e.dev_f1_macro}});
    wall.push_back(e.wall_seconds);
  }
  nlohmann::ordered_json j;
  j["schema"] = "eventaware.train_history";
  j["schema_version"] = 1;
  j["payload"] = std::move(payload);
  j["metadata"] = {{"wall_seconds", std::move(wall)}};
  return j;
}

EncodedSet encode_corpus(const Corpus& corpus, const Vocab& vocab, Encoding encoding,
                         std::size_t max_len) {
  EncodedSet s;
  s.inputs.reserve(corpus.size());
  for (const auto& ex : corpus.examples) {
    s.inputs.push_back(encode_example(encoding, ex.event_type, ex.text, vocab, max_len));
    s.gold.push_back(corpus.label_index(ex.label));
    s.events.push_back(ex.event_type);
  }
  return s;
}

std::vector<std::size_t> predict_all(const Model& model, const std::vector<EncodedInput>& inputs) {
  std::vector<std::size_t> out;
  out.reserve(inputs.size());
  constexpr std::size_t kChunk = 256;
  for (std::size_t i = 0; i < inputs.size(); i += kChunk) {
    const auto n = std::min(kChunk, inputs.size() - i);
    auto part = predict(model, std::span<const EncodedInput>(inputs.data() + i, n));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

TrainResult train(const SplitSet& splits, const Vocab& vocab, ModelConfig model_config,
                  const TrainConfig& cfg, Encoding encoding) {
  cfg.validate();
  if (splits.train.empty()) throw Error(ErrorKind::empty_corpus, "training split is empty");
  const auto& labels = splits.train.label_vocab;
  if (model_config.vocab_size == 0) model_config.vocab_size = vocab.size();
  if (model_config.n_classes == 0) model_config.n_classes = labels.size();
  if (model_config.vocab_size != vocab.size())
    throw Error(ErrorKind::config, "model vocab_size does not match the vocabulary");
  if (model_config.n_classes != labels.size())
    throw Error(ErrorKind::config, "model n_classes does not match the label vocabulary");

  const auto train_set = encode_corpus(splits.train, vocab, encoding, model_config.max_len);
  const auto dev_set = encode_corpus(splits.dev, vocab, encoding, model_config.max_len);
  if (dev_set.inputs.empty())
    diag::warn({"empty_dev", "dev split is empty; training runs all epochs and keeps the last", {}});

  TrainResult result{init_model(model_config, mix_seed(cfg.seed, 1)), {}};
  Model& model = result.model;
  TrainHistory& history = result.history;
  history.selection_metric = cfg.selection_metric;

  AdamState adam = AdamState::zeros_like(model);
  Rng shuffle_rng(mix_seed(cfg.seed, 2));
  std::vector<std::size_t> order(train_set.inputs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  Parameters best = model.params;
  double best_metric = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::size_t step = 0;
  std::vector<EncodedInput> batch;
  std::vector<std::size_t> batch_gold;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      batch_gold.clear();
      for (std::size_t k = start; k < end; ++k) {
        batch.push_back(train_set.inputs[order[k]]);
        batch_gold.push_back(train_set.gold[order[k]]);
      }
      ++step;
      auto lg = backward(model, batch, batch_gold, true, mix_seed(cfg.seed, 1000 + step));
      loss_sum += lg.loss * static_cast<double>(batch.size());
      adam_step(model, lg.gradients, adam, step, cfg);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    bool improved = true;
    if (!dev_set.inputs.empty()) {
      const auto preds = predict_all(model, dev_set.inputs);
      const auto r = evaluate(dev_set.gold, preds, labels);
      rec.dev_accuracy = r.accuracy;
      rec.dev_f1_macro = r.f1_macro;
      rec.dev_metric = metric_of(r, cfg.selection_metric);
      if (!std::isfinite(rec.dev_metric)) throw Error(ErrorKind::numeric, "dev metric is not finite");
      improved = rec.dev_metric > best_metric;
    }
    if (!std::isfinite(rec.train_loss))
      throw Error(ErrorKind::numeric, "training loss diverged at epoch " + std::to_string(epoch));
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history.epochs.push_back(rec);

    if (improved) {
      best_metric = rec.dev_metric;
      best = model.params;
      history.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best > cfg.patience) {
      history.early_stopped = true;
      break;
    }
  }
  model.params = std::move(best);
  return result;
}

namespace {

// L(z+) - L(z-) from the two logit matrices without forming either loss.
// Per example: log(sum_c softmax(z-)_c exp(d_c)) - d_gold with d = z+ - z-,
// evaluated through log1p/expm1 so the result keeps precision when d is tiny.
double loss_difference(const Matrix& plus, const Matrix& minus, std::span<const std::size_t> gold) {
  double total = 0;
  for (Eigen::Index b = 0; b < plus.rows(); ++b) {
    const double m = minus.row(b).maxCoeff();
    double z = 0, acc = 0;
    for (Eigen::Index c = 0; c < plus.cols(); ++c) {
      const double w = std::exp(minus(b, c) - m);
      z += w;
      acc += w * std::expm1(plus(b, c) - minus(b, c));
    }
    const auto g = static_cast<Eigen::Index>(gold[static_cast<std::size_t>(b)]);
    total += std::log1p(acc / z) - (plus(b, g) - minus(b, g));
  }
  return total / static_cast<double>(plus.rows());
}

}  // namespace

GradCheckReport grad_check(const Model& model, std::span<const EncodedInput> batch,
                           std::span<const std::size_t> gold, double epsilon,
                           std::size_t samples_per_tensor, std::uint64_t seed) {
  if (!(epsilon > 0)) throw Error(ErrorKind::parameter, "epsilon must be positive");
  const auto analytic = backward(model, batch, gold, false);
  Model probe = model;
  Rng rng(seed);

  std::set<Eigen::Index> token_rows, position_rows, segment_rows;
  for (const auto& in : batch)
    for (std::size_t i = 0; i < in.true_length; ++i) {
      token_rows.insert(in.token_ids[i]);
      position_rows.insert(static_cast<Eigen::Index>(i));
      segment_rows.insert(in.segment_ids[i]);
    }

  GradCheckReport report;
  auto probe_tensors = probe.params.tensors();
  const auto grad_tensors = analytic.gradients.tensors();
  for (std::size_t ti = 0; ti < probe_tensors.size(); ++ti) {
    auto& t = *probe_tensors[ti].tensor;
    const auto& g = *grad_tensors[ti].tensor;
    const auto& name = probe_tensors[ti].name;
    const std::set<Eigen::Index>* rows = name == "token_embeddings"      ? &token_rows
                                         : name == "position_embeddings" ? &position_rows
                                         : name == "segment_embeddings"  ? &segment_rows
                                                                         : nullptr;
    std::vector<Eigen::Index> candidate_rows;
    if (rows) candidate_rows.assign(rows->begin(), rows->end());

    TensorCheck tc{name, 0, 0, 0};
    for (std::size_t s = 0; s < samples_per_tensor; ++s) {
      Eigen::Index r, col;
      if (rows) {
        r = candidate_rows[rng.below(candidate_rows.size())];
        col = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(t.cols())));
      } else {
        const auto flat = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(t.size())));
        r = flat / t.cols();
        col = flat % t.cols();
      }
      const double original = t(r, col);
      t(r, col) = original + epsilon;
      const Matrix plus = forward(probe, batch, false).logits;
      t(r, col) = original - epsilon;
      const Matrix minus = forward(probe, batch, false).logits;
      t(r, col) = original;
      const double numeric = loss_difference(plus, minus, gold) / (2.0 * epsilon);
      const double a = g(r, col);
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (rel >= tc.max_relative_error) {
        tc.max_relative_error = rel;
        tc.analytic = a;
        tc.numeric = numeric;
      }
    }
    report.max_relative_error = std::max(report.max_relative_error, tc.max_relative_error);
    report.tensors.push_back(std::move(tc));
  }
  return report;
}

}  // namespace eventaware
