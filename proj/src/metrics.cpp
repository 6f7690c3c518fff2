#include "eventaware/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "eventaware/error.hpp"

namespace eventaware {
namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts)
    for (auto c : row) n += c;
  return n;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) n += counts[i][i];
  return n;
}

ConfusionMatrix confusion(const std::vector<std::size_t>& golds,
                          const std::vector<std::size_t>& preds, std::size_t num_classes,
                          std::vector<std::string> class_names) {
  if (golds.size() != preds.size())
    throw Error(ErrorKind::shape, "gold and prediction sequences differ in length");
  if (!class_names.empty() && class_names.size() != num_classes)
    throw Error(ErrorKind::shape, "class name count does not match number of classes");
  if (class_names.empty())
    for (std::size_t c = 0; c < num_classes; ++c) class_names.push_back(std::to_string(c));
  ConfusionMatrix cm{std::vector<std::vector<std::size_t>>(num_classes,
                                                           std::vector<std::size_t>(num_classes, 0)),
                     std::move(class_names)};
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (golds[i] >= num_classes || preds[i] >= num_classes)
      throw Error(ErrorKind::index, "class index out of range at position " + std::to_string(i));
    ++cm.counts[golds[i]][preds[i]];
  }
  return cm;
}

MetricsReport report(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) throw Error(ErrorKind::empty_evaluation, "nothing to evaluate");
  const std::size_t k = cm.num_classes();
  MetricsReport r;
  r.total = total;
  r.class_names = cm.class_names;
  r.confusion = cm;
  r.per_class.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t predicted = 0, support = 0;
    for (std::size_t j = 0; j < k; ++j) {
      support += cm.counts[c][j];
      predicted += cm.counts[j][c];
    }
    const double tp = static_cast<double>(cm.counts[c][c]);
    auto& s = r.per_class[c];
    s.support = support;
    s.precision = ratio(tp, static_cast<double>(predicted));
    s.recall = ratio(tp, static_cast<double>(support));
    s.f1 = ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
    r.precision_macro += s.precision;
    r.recall_macro += s.recall;
    r.f1_macro += s.f1;
    r.f1_weighted += static_cast<double>(support) * s.f1;
  }
  r.precision_macro /= static_cast<double>(k);
  r.recall_macro /= static_cast<double>(k);
  r.f1_macro /= static_cast<double>(k);
  r.f1_weighted /= static_cast<double>(total);
  r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
  return r;
}

MetricsReport evaluate(const std::vector<std::size_t>& golds, const std::vector<std::size_t>& preds,
                       const std::vector<std::string>& class_names,
                       const std::optional<std::vector<std::string>>& events) {
  auto r = report(confusion(golds, preds, class_names.size(), class_names));
  if (events) {
    if (events->size() != golds.size())
      throw Error(ErrorKind::shape, "event sequence length differs from gold sequence");
    std::map<std::string, std::pair<std::size_t, std::size_t>> tally;
    for (std::size_t i = 0; i < golds.size(); ++i) {
      auto& [correct, n] = tally[(*events)[i]];
      correct += golds[i] == preds[i] ? 1 : 0;
      ++n;
    }
    for (const auto& [e, t] : tally)
      r.per_event_accuracy[e] = {static_cast<double>(t.first) / static_cast<double>(t.second), t.second};
  }
  return r;
}

nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["precision_macro"] = r.precision_macro;
  j["recall_macro"] = r.recall_macro;
  j["f1_macro"] = r.f1_macro;
  j["f1_weighted"] = r.f1_weighted;
  j["accuracy"] = r.accuracy;
  j["total"] = r.total;
  auto& per = j["per_class"] = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& s = r.per_class[c];
    per[r.class_names[c]] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
                             {"support", s.support}};
  }
  auto& ev = j["per_event_accuracy"] = nlohmann::ordered_json::object();
  for (const auto& [e, a] : r.per_event_accuracy)
    ev[e] = {{"accuracy", a.accuracy}, {"support", a.support}};
  j["confusion"] = {{"labels", r.confusion.class_names}, {"counts", r.confusion.counts}};
  return j;
}

std::string render_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::size_t width = 5;
  for (const auto& [name, _] : rows) width = std::max(width, name.size());
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-*s | %6s %6s %6s | %6s %6s\n", static_cast<int>(width), "Model",
                "Prec", "Rec", "u-F1", "w-F1", "Acc");
  out << buf;
  out << std::string(width, '-') << "-+-" << std::string(20, '-') << "-+-" << std::string(13, '-')
      << '\n';
  for (const auto& [name, r] : rows) {
    std::snprintf(buf, sizeof buf, "%-*s | %6.1f %6.1f %6.1f | %6.1f %6.1f\n",
                  static_cast<int>(width), name.c_str(), 100 * r.precision_macro,
                  100 * r.recall_macro, 100 * r.f1_macro, 100 * r.f1_weighted, 100 * r.accuracy);
    out << buf;
  }
  return out.str();
}

}  // namespace eventaware
