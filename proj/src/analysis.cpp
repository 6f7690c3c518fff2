#include "eventaware/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "eventaware/diagnostics.hpp"
#include "eventaware/error.hpp"
#include "eventaware/rng.hpp"
#include "eventaware/training.hpp"

namespace eventaware {
namespace {

std::vector<double> smoothed(const std::vector<double>& p, double smoothing) {
  std::vector<double> out(p.size());
  double total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0 || !std::isfinite(p[i]))
      throw Error(ErrorKind::parameter, "distribution has a negative or non-finite entry");
    out[i] = p[i] + smoothing;
    total += out[i];
  }
  if (total <= 0) throw Error(ErrorKind::undefined_distribution, "distribution has zero mass");
  for (auto& x : out) x /= total;
  return out;
}

CategoricalDist distribution_of(const std::vector<std::size_t>& indices,
                                const std::vector<std::string>& labels) {
  CategoricalDist d{labels, std::vector<double>(labels.size(), 0.0)};
  for (auto i : indices) d.probs[i] += 1.0;
  for (auto& p : d.probs) p /= static_cast<double>(indices.size());
  return d;
}

double squared_distance(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

std::size_t nearest(const Matrix& points, Eigen::Index i, const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = squared_distance(points, i, centroids, 0);
  for (Eigen::Index c = 1; c < centroids.rows(); ++c) {
    const double dist = squared_distance(points, i, centroids, c);
    if (dist < best_d) {
      best_d = dist;
      best = static_cast<std::size_t>(c);
    }
  }
  return best;
}

double inertia_of(const Matrix& points, const std::vector<std::size_t>& assignment,
                  const Matrix& centroids) {
  double total = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    total += squared_distance(points, i, centroids, static_cast<Eigen::Index>(assignment[static_cast<std::size_t>(i)]));
  return total;
}

}  // namespace

double kl_divergence(const CategoricalDist& p, const CategoricalDist& q, double smoothing) {
  if (p.labels != q.labels || p.probs.size() != q.probs.size() || p.probs.size() != p.labels.size())
    throw Error(ErrorKind::parameter, "KL divergence needs distributions over the same support");
  if (smoothing < 0) throw Error(ErrorKind::parameter, "smoothing must be non-negative");
  const auto ps = smoothed(p.probs, smoothing);
  const auto qs = smoothed(q.probs, smoothing);
  double kl = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i] == 0) continue;
    if (qs[i] == 0) return std::numeric_limits<double>::infinity();
    kl += ps[i] * std::log(ps[i] / qs[i]);
  }
  // Rounding can leave a tiny negative value for identical inputs.
  return std::max(kl, 0.0);
}

KLReport distribution_shift_report(const Model& model, const Corpus& test, const Vocab& vocab,
                                   double smoothing) {
  if (test.empty()) throw Error(ErrorKind::empty_evaluation, "test corpus is empty");
  if (test.label_vocab.size() != model.config.n_classes)
    throw Error(ErrorKind::compatibility, "label vocabulary does not match the model's classes");
  KLReport r;
  r.smoothing = smoothing;
  r.test_gold = label_distribution(test.examples, test.label_vocab);

  for (const auto& event : test.event_vocab) {
    std::vector<EncodedInput> inputs;
    inputs.reserve(test.size());
    for (const auto& ex : test.examples)
      inputs.push_back(encode_pair(event, ex.text, vocab, model.config.max_len));
    EventShift s;
    s.predicted = distribution_of(predict_all(model, inputs), test.label_vocab);

    std::vector<Example> own;
    for (const auto& ex : test.examples)
      if (ex.event_type == event) own.push_back(ex);
    if (own.empty()) {
      s.no_gold_examples = true;
      s.event_gold = label_distribution(own, test.label_vocab, 1.0);
      diag::warn({"kl_event_without_gold", "event has no gold test examples; uniform used",
                  {{"event", event}}});
    } else {
      s.event_gold = label_distribution(own, test.label_vocab);
    }
    s.kl_event_vs_pred = kl_divergence(s.event_gold, s.predicted, smoothing);
    s.kl_test_vs_pred = kl_divergence(r.test_gold, s.predicted, smoothing);
    s.kl_pred_vs_event = kl_divergence(s.predicted, s.event_gold, smoothing);
    s.kl_pred_vs_test = kl_divergence(s.predicted, r.test_gold, smoothing);
    r.sum_event_vs_pred += s.kl_event_vs_pred;
    r.sum_test_vs_pred += s.kl_test_vs_pred;
    r.sum_pred_vs_event += s.kl_pred_vs_event;
    r.sum_pred_vs_test += s.kl_pred_vs_test;
    r.per_event.emplace(event, std::move(s));
  }
  const double n = static_cast<double>(r.per_event.size());
  r.mean_event_vs_pred = r.sum_event_vs_pred / n;
  r.mean_test_vs_pred = r.sum_test_vs_pred / n;
  r.mean_pred_vs_event = r.sum_pred_vs_event / n;
  r.mean_pred_vs_test = r.sum_pred_vs_test / n;
  r.inequality_holds = r.sum_event_vs_pred < r.sum_test_vs_pred;
  r.reversed_inequality_holds = r.sum_pred_vs_event < r.sum_pred_vs_test;
  return r;
}

LinkDirection parse_link_direction(std::string_view s) {
  if (s == "text_to_event") return LinkDirection::text_to_event;
  if (s == "event_to_text") return LinkDirection::event_to_text;
  if (s == "either") return LinkDirection::either;
  throw Error(ErrorKind::parameter, "unknown link direction '" + std::string(s) + "'");
}

std::string_view to_string(LinkDirection d) {
  switch (d) {
    case LinkDirection::text_to_event: return "text_to_event";
    case LinkDirection::event_to_text: return "event_to_text";
    case LinkDirection::either: return "either";
  }
  return "?";
}

std::set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open stopword list " + path.string());
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    if (!line.empty() && line[0] != '#') words.insert(line);
  }
  return words;
}

std::set<std::string> default_stopwords() {
  return load_stopwords(std::filesystem::path(EVENTAWARE_DATA_DIR) / "stopwords_en.txt");
}

void accumulate_links(AttentionLinkCounts& counts, const std::string& event,
                      const EncodedInput& input, const AttentionMaps& attention,
                      const Vocab& vocab, const std::set<std::string>& stopwords) {
  auto& bucket = counts.per_event[event];
  if (event_token_count(input) == 0)
    throw Error(ErrorKind::invalid_metadata, "attention links need an event-aware encoding");
  constexpr std::size_t event_pos = 1;
  for (std::size_t t = 0; t < input.true_length; ++t) {
    if (input.segment_ids[t] != 1) continue;
    const auto id = input.token_ids[t];
    if (id < Vocab::kNumSpecials) continue;
    const auto& token = vocab.token(id);
    if (stopwords.contains(token) || is_punctuation_token(token)) continue;
    bool linked = false;
    for (std::size_t l = 0; l < attention.n_layers() && !linked; ++l)
      for (std::size_t h = 0; h < attention.n_heads() && !linked; ++h) {
        const double to_event = attention.at(l, h, t, event_pos);
        const double from_event = attention.at(l, h, event_pos, t);
        const double w = counts.direction == LinkDirection::text_to_event   ? to_event
                         : counts.direction == LinkDirection::event_to_text ? from_event
                                                                            : std::max(to_event, from_event);
        linked = w > counts.threshold;
      }
    if (linked) ++bucket[token];
  }
}

AttentionLinkCounts attention_link_counts(const Model& model, const Corpus& dataset,
                                          const Vocab& vocab,
                                          const std::set<std::string>& stopwords, double threshold,
                                          LinkDirection direction) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw Error(ErrorKind::parameter, "attention threshold must lie in (0, 1]");
  AttentionLinkCounts counts;
  counts.threshold = threshold;
  counts.direction = direction;
  for (const auto& e : dataset.event_vocab) counts.per_event[e];
  for (const auto& ex : dataset.examples) {
    const auto input = encode_pair(ex.event_type, ex.text, vocab, model.config.max_len);
    const auto out = forward(model, std::span<const EncodedInput>(&input, 1));
    accumulate_links(counts, ex.event_type, input, out.attentions[0], vocab, stopwords);
  }
  return counts;
}

std::map<std::string, std::vector<ScoredToken>> tfidf_top_k(const AttentionLinkCounts& counts,
                                                            std::size_t k) {
  const double n_docs = static_cast<double>(counts.per_event.size());
  std::map<std::string, std::size_t> df;
  for (const auto& [event, tokens] : counts.per_event)
    for (const auto& [token, c] : tokens)
      if (c > 0) ++df[token];

  std::map<std::string, std::vector<ScoredToken>> out;
  for (const auto& [event, tokens] : counts.per_event) {
    auto& ranked = out[event];
    std::size_t total = 0;
    for (const auto& [_, c] : tokens) total += c;
    if (total == 0) continue;
    for (const auto& [token, c] : tokens) {
      if (c == 0) continue;
      const double tf = static_cast<double>(c) / static_cast<double>(total);
      const double idf = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df[token]))) + 1.0;
      ranked.push_back({token, tf * idf});
    }
    std::sort(ranked.begin(), ranked.end(), [](const ScoredToken& a, const ScoredToken& b) {
      return a.score != b.score ? a.score > b.score : a.token < b.token;
    });
    if (ranked.size() > k) ranked.resize(k);
  }
  return out;
}

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iters) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0) throw Error(ErrorKind::parameter, "k must be at least 1");
  if (k > n) throw Error(ErrorKind::parameter, "k exceeds the number of points");
  Rng rng(seed);
  KMeansResult r;
  r.centroids.resize(static_cast<Eigen::Index>(k), points.cols());

  // k-means++ seeding.
  r.centroids.row(0) = points.row(static_cast<Eigen::Index>(rng.below(n)));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], squared_distance(points, static_cast<Eigen::Index>(i), r.centroids,
                                               static_cast<Eigen::Index>(c - 1)));
    double total = 0;
    for (double x : d2) total += x;
    std::size_t pick = 0;
    if (total > 0) {
      pick = rng.categorical(d2);
    } else {
      pick = rng.below(n);  // all remaining points coincide with a centre
    }
    r.centroids.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(pick));
  }

  r.assignment.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) r.assignment[i] = nearest(points, static_cast<Eigen::Index>(i), r.centroids);

  for (std::size_t it = 0; it < max_iters; ++it) {
    // Update step, re-seeding empty clusters from the worst-served point.
    Matrix sums = Matrix::Zero(r.centroids.rows(), r.centroids.cols());
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(r.assignment[i])) += points.row(static_cast<Eigen::Index>(i));
      ++sizes[r.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (sizes[c] > 0)
        r.centroids.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(sizes[c]);
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      std::size_t far = 0;
      double far_d = -1;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[r.assignment[i]] <= 1) continue;
        const double dist = squared_distance(points, static_cast<Eigen::Index>(i), r.centroids,
                                             static_cast<Eigen::Index>(r.assignment[i]));
        if (dist > far_d) {
          far_d = dist;
          far = i;
        }
      }
      if (far_d < 0) continue;
      --sizes[r.assignment[far]];
      r.assignment[far] = c;
      sizes[c] = 1;
      r.centroids.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(far));
    }
    r.inertia.push_back(inertia_of(points, r.assignment, r.centroids));
    ++r.iterations;

    // Assignment step.
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto best = nearest(points, static_cast<Eigen::Index>(i), r.centroids);
      // Keep the current cluster on exact distance ties.
      if (best != r.assignment[i] &&
          squared_distance(points, static_cast<Eigen::Index>(i), r.centroids, static_cast<Eigen::Index>(best)) <
              squared_distance(points, static_cast<Eigen::Index>(i), r.centroids,
                               static_cast<Eigen::Index>(r.assignment[i]))) {
        r.assignment[i] = best;
        changed = true;
      }
    }
    if (!changed) {
      r.converged = true;
      break;
    }
  }
  return r;
}

ClusterReport cluster_tokens(const Model& model, const std::vector<std::string>& tokens,
                             const Vocab& vocab, std::size_t k, std::uint64_t seed,
                             std::size_t max_iters) {
  if (k == 0) throw Error(ErrorKind::parameter, "number of clusters must be at least 1");
  ClusterReport r;
  r.tokens = tokens;
  if (tokens.empty()) return r;
  if (k > tokens.size()) {
    diag::warn({"clusters_reduced", "k exceeds the number of tokens; reduced",
                {{"requested", std::to_string(k)}, {"used", std::to_string(tokens.size())}}});
    k = tokens.size();
  }
  Matrix points(static_cast<Eigen::Index>(tokens.size()), static_cast<Eigen::Index>(model.config.d_model));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!vocab.contains(tokens[i]))
      throw Error(ErrorKind::index, "token '" + tokens[i] + "' is not in the vocabulary");
    points.row(static_cast<Eigen::Index>(i)) = token_embedding(model, vocab.id(tokens[i]));
  }
  auto km = kmeans(points, k, seed, max_iters);
  r.k = k;
  r.centroids = std::move(km.centroids);
  r.iterations = km.iterations;
  r.inertia = std::move(km.inertia);
  for (std::size_t i = 0; i < tokens.size(); ++i) r.assignment[tokens[i]] = km.assignment[i];
  return r;
}

nlohmann::ordered_json to_json(const CategoricalDist& d) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < d.labels.size(); ++i) j[d.labels[i]] = d.probs[i];
  return j;
}

nlohmann::ordered_json to_json(const EventDistributions& d) {
  nlohmann::ordered_json events = nlohmann::ordered_json::object();
  for (const auto& [event, count] : d.event_count) {
    nlohmann::ordered_json e;
    e["count"] = count;
    e["share"] = d.event_share.at(event);
    auto it = d.per_event.find(event);
    e["labels"] = it == d.per_event.end() ? nlohmann::ordered_json(nullptr) : to_json(it->second);
    events[event] = std::move(e);
  }
  return events;
}

nlohmann::ordered_json to_json(const KLReport& r) {
  nlohmann::ordered_json j;
  j["smoothing"] = r.smoothing;
  j["test_distribution"] = to_json(r.test_gold);
  auto& per = j["per_event"] = nlohmann::ordered_json::object();
  for (const auto& [event, s] : r.per_event) {
    per[event] = {{"kl_event_vs_pred", s.kl_event_vs_pred},
                  {"kl_test_vs_pred", s.kl_test_vs_pred},
                  {"kl_pred_vs_event", s.kl_pred_vs_event},
                  {"kl_pred_vs_test", s.kl_pred_vs_test},
                  {"no_gold_examples", s.no_gold_examples},
                  {"predicted_distribution", to_json(s.predicted)},
                  {"event_distribution", to_json(s.event_gold)}};
  }
  j["sum_event_vs_pred"] = r.sum_event_vs_pred;
  j["sum_test_vs_pred"] = r.sum_test_vs_pred;
  j["mean_event_vs_pred"] = r.mean_event_vs_pred;
  j["mean_test_vs_pred"] = r.mean_test_vs_pred;
  j["sum_pred_vs_event"] = r.sum_pred_vs_event;
  j["sum_pred_vs_test"] = r.sum_pred_vs_test;
  j["mean_pred_vs_event"] = r.mean_pred_vs_event;
  j["mean_pred_vs_test"] = r.mean_pred_vs_test;
  j["inequality_holds"] = r.inequality_holds;
  j["reversed_inequality_holds"] = r.reversed_inequality_holds;
  return j;
}

nlohmann::ordered_json to_json(const AttentionLinkCounts& c) {
  nlohmann::ordered_json j;
  j["threshold"] = c.threshold;
  j["direction"] = std::string(to_string(c.direction));
  j["aggregation"] = c.aggregation;
  auto& per = j["per_event"] = nlohmann::ordered_json::object();
  for (const auto& [event, tokens] : c.per_event) {
    auto& e = per[event] = nlohmann::ordered_json::object();
    for (const auto& [token, n] : tokens) e[token] = n;
  }
  return j;
}

nlohmann::ordered_json to_json(const ClusterReport& r) {
  nlohmann::ordered_json j;
  j["k"] = r.k;
  j["iterations"] = r.iterations;
  j["tokens"] = r.tokens;
  auto& assign = j["assignment"] = nlohmann::ordered_json::object();
  for (const auto& t : r.tokens) assign[t] = r.assignment.at(t);
  auto& centroids = j["centroids"] = nlohmann::ordered_json::array();
  for (Eigen::Index c = 0; c < r.centroids.rows(); ++c) {
    std::vector<double> row(r.centroids.row(c).data(), r.centroids.row(c).data() + r.centroids.cols());
    centroids.push_back(row);
  }
  j["inertia"] = r.inertia;
  return j;
}

std::string to_dot(const std::string& name, const ClusterReport& r) {
  static constexpr const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                             "#66a61e", "#e6ab02", "#a6761d", "#666666"};
  const auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out + "\"";
  };
  std::ostringstream out;
  out << "graph " << quote(name) << " {\n  node [style=filled];\n";
  for (std::size_t c = 0; c < r.k; ++c) {
    out << "  subgraph " << quote("cluster_" + std::to_string(c)) << " {\n    label="
        << quote("cluster " + std::to_string(c)) << ";\n";
    for (const auto& t : r.tokens)
      if (r.assignment.at(t) == c)
        out << "    " << quote(t) << " [fillcolor=" << quote(kPalette[c % std::size(kPalette)])
            << "];\n";
    out << "  }\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace eventaware
