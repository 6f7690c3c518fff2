#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "eventaware/corpus.hpp"
#include "eventaware/model.hpp"
#include "eventaware/tokenizer.hpp"
#include "json.hpp"

namespace eventaware {

// ---------------------------------------------------------------------------
// Label-distribution shift

/// KL(p || q) in nats after additive smoothing and renormalization of both.
/// Throws Error(parameter) when the supports differ.
double kl_divergence(const CategoricalDist& p, const CategoricalDist& q, double smoothing = 1e-6);

struct EventShift {
  CategoricalDist predicted;   // label distribution predicted with metadata forced to E
  CategoricalDist event_gold;  // gold labels of test examples whose event is E
  double kl_event_vs_pred = 0;  // KL(De(E) || Dt(E))
  double kl_test_vs_pred = 0;   // KL(Dt || Dt(E))
  double kl_pred_vs_event = 0;  // KL(Dt(E) || De(E))
  double kl_pred_vs_test = 0;   // KL(Dt(E) || Dt)
  bool no_gold_examples = false;
};

struct KLReport {
  CategoricalDist test_gold;  // Dt
  std::map<std::string, EventShift> per_event;
  double sum_event_vs_pred = 0;
  double sum_test_vs_pred = 0;
  double mean_event_vs_pred = 0;
  double mean_test_vs_pred = 0;
  // Same comparison with the prediction distribution as first argument.
  double sum_pred_vs_event = 0;
  double sum_pred_vs_test = 0;
  double mean_pred_vs_event = 0;
  double mean_pred_vs_test = 0;
  // sum KL(De(E)||Dt(E)) < sum KL(Dt||Dt(E))
  bool inequality_holds = false;
  bool reversed_inequality_holds = false;
  double smoothing = 0;
};

/// Re-encodes the whole test set once per event with that event forced as
/// metadata and compares the predicted label distribution with the event's
/// gold distribution and with the overall test distribution.
KLReport distribution_shift_report(const Model& model, const Corpus& test, const Vocab& vocab,
                                   double smoothing = 1e-6);

// ---------------------------------------------------------------------------
// Attention links between text tokens and the event token

enum class LinkDirection { text_to_event, event_to_text, either };

LinkDirection parse_link_direction(std::string_view s);
std::string_view to_string(LinkDirection d);

struct AttentionLinkCounts {
  double threshold = 0.5;
  LinkDirection direction = LinkDirection::text_to_event;
  std::string aggregation = "any_layer_head";
  // event -> token -> number of (example, position) links
  std::map<std::string, std::map<std::string, std::size_t>> per_event;
};

std::set<std::string> load_stopwords(const std::filesystem::path& path);
/// The shipped English list.
std::set<std::string> default_stopwords();

/// Adds the links of one encoded example given its attention maps. A text
/// position is linked when some layer/head weight in the configured direction
/// between it and the first event-token position exceeds the threshold.
void accumulate_links(AttentionLinkCounts& counts, const std::string& event,
                      const EncodedInput& input, const AttentionMaps& attention,
                      const Vocab& vocab, const std::set<std::string>& stopwords);

/// Runs the model over every example (event-aware encoding) and counts links.
/// threshold must lie in (0, 1].
AttentionLinkCounts attention_link_counts(const Model& model, const Corpus& dataset,
                                          const Vocab& vocab,
                                          const std::set<std::string>& stopwords,
                                          double threshold = 0.5,
                                          LinkDirection direction = LinkDirection::text_to_event);

struct ScoredToken {
  std::string token;
  double score = 0;
};

/// Events are the documents: tf = count / event total, idf = ln((1+N)/(1+df)) + 1.
/// Top k per event by score, ties broken lexicographically.
std::map<std::string, std::vector<ScoredToken>> tfidf_top_k(const AttentionLinkCounts& counts,
                                                            std::size_t k = 50);

// ---------------------------------------------------------------------------
// Clustering

struct KMeansResult {
  std::vector<std::size_t> assignment;  // per point
  Matrix centroids;                     // k x dim
  std::vector<double> inertia;          // within-cluster SSE after each iteration
  std::size_t iterations = 0;
  bool converged = false;
};

/// k-means++ seeding, Euclidean Lloyd iterations until the assignment stops
/// changing or max_iters; empty clusters take the point farthest from its centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = 100);

struct ClusterReport {
  std::vector<std::string> tokens;
  std::map<std::string, std::size_t> assignment;
  Matrix centroids;
  std::size_t k = 0;
  std::size_t iterations = 0;
  std::vector<double> inertia;
};

/// Clusters the context-free input embeddings of the given tokens. k larger
/// than the number of tokens is reduced with a warning.
ClusterReport cluster_tokens(const Model& model, const std::vector<std::string>& tokens,
                             const Vocab& vocab, std::size_t k = 5, std::uint64_t seed = 0,
                             std::size_t max_iters = 100);

// ---------------------------------------------------------------------------
// Serialization

nlohmann::ordered_json to_json(const CategoricalDist& d);
nlohmann::ordered_json to_json(const EventDistributions& d);
nlohmann::ordered_json to_json(const KLReport& r);
nlohmann::ordered_json to_json(const AttentionLinkCounts& c);
nlohmann::ordered_json to_json(const ClusterReport& r);

/// Graphviz graph, one node per token filled by cluster colour.
std::string to_dot(const std::string& name, const ClusterReport& r);

}  // namespace eventaware
