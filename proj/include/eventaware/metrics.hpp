#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace eventaware {

/// counts[gold][predicted].
struct ConfusionMatrix {
  std::vector<std::vector<std::size_t>> counts;
  std::vector<std::string> class_names;

  std::size_t num_classes() const { return counts.size(); }
  std::size_t total() const;
  std::size_t trace() const;
};

ConfusionMatrix confusion(const std::vector<std::size_t>& golds,
                          const std::vector<std::size_t>& preds, std::size_t num_classes,
                          std::vector<std::string> class_names = {});

struct ClassScores {
  double precision = 0, recall = 0, f1 = 0;
  std::size_t support = 0;
};

struct EventAccuracy {
  double accuracy = 0;
  std::size_t support = 0;
};

struct MetricsReport {
  double precision_macro = 0;
  double recall_macro = 0;
  double f1_macro = 0;
  double f1_weighted = 0;
  double accuracy = 0;
  std::size_t total = 0;
  std::vector<std::string> class_names;
  std::vector<ClassScores> per_class;
  std::map<std::string, EventAccuracy> per_event_accuracy;
  ConfusionMatrix confusion;
};

/// 0/0 counts as 0; macro means run over every class, including classes with
/// no support. Throws Error(empty_evaluation) when the matrix is empty.
MetricsReport report(const ConfusionMatrix& cm);

/// report() plus accuracy per event when events (parallel to golds) are given.
MetricsReport evaluate(const std::vector<std::size_t>& golds, const std::vector<std::size_t>& preds,
                       const std::vector<std::string>& class_names,
                       const std::optional<std::vector<std::string>>& events = std::nullopt);

nlohmann::ordered_json to_json(const MetricsReport& r);

/// Aligned text rows in percentage points, columns Prec / Rec / u-F1 / w-F1 / Acc.
std::string render_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

}  // namespace eventaware
