#include <gtest/gtest.h>

#include <numeric>

#include "eventaware/error.hpp"
#include "eventaware/metrics.hpp"
#include "eventaware/rng.hpp"

using namespace eventaware;

namespace {

ConfusionMatrix from_counts(std::vector<std::vector<std::size_t>> counts) {
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < counts.size(); ++i) cm.class_names.push_back("c" + std::to_string(i));
  cm.counts = std::move(counts);
  return cm;
}

}  // namespace

TEST(Confusion, Counting) {
  const auto cm = confusion({0, 1}, {0, 0}, 2);
  EXPECT_EQ(cm.counts, (std::vector<std::vector<std::size_t>>{{1, 0}, {1, 0}}));
}

TEST(Confusion, IdentityIsDiagonal) {
  const std::vector<std::size_t> y{0, 2, 1, 2, 2};
  const auto cm = confusion(y, y, 3);
  EXPECT_EQ(cm.trace(), 5u);
  EXPECT_EQ(cm.counts[2][2], 3u);
  EXPECT_EQ(cm.counts[0][1], 0u);
}

TEST(Confusion, EmptyIsZeroMatrix) {
  const auto cm = confusion({}, {}, 3);
  EXPECT_EQ(cm.total(), 0u);
  EXPECT_EQ(cm.num_classes(), 3u);
}

TEST(Confusion, LengthMismatchIsShapeError) {
  try {
    confusion({0, 1}, {0}, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
  }
}

TEST(Report, HandComputedFixture) {
  const auto r = report(from_counts({{1, 1}, {0, 2}}));
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(r.precision_macro, 5.0 / 6.0);
  EXPECT_DOUBLE_EQ(r.recall_macro, 0.75);
  EXPECT_DOUBLE_EQ(r.per_class[0].f1, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.per_class[1].f1, 4.0 / 5.0);
  EXPECT_DOUBLE_EQ(r.f1_macro, 11.0 / 15.0);
  EXPECT_DOUBLE_EQ(r.f1_weighted, 11.0 / 15.0);
}

TEST(Report, PerfectPredictions) {
  const auto r = report(from_counts({{3, 0, 0}, {0, 1, 0}, {0, 0, 5}}));
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(r.precision_macro, 1.0);
  EXPECT_DOUBLE_EQ(r.recall_macro, 1.0);
  EXPECT_DOUBLE_EQ(r.f1_macro, 1.0);
  EXPECT_DOUBLE_EQ(r.f1_weighted, 1.0);
}

TEST(Report, ZeroSupportClassStillInMacroMean) {
  const auto r = report(from_counts({{2, 0, 0}, {0, 2, 0}, {0, 0, 0}}));
  EXPECT_EQ(r.per_class[2].support, 0u);
  EXPECT_DOUBLE_EQ(r.per_class[2].precision, 0.0);
  EXPECT_DOUBLE_EQ(r.per_class[2].recall, 0.0);
  EXPECT_DOUBLE_EQ(r.per_class[2].f1, 0.0);
  EXPECT_DOUBLE_EQ(r.f1_macro, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.f1_weighted, 1.0);
}

TEST(Report, EmptyIsEmptyEvaluation) {
  try {
    report(from_counts({{0, 0}, {0, 0}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_evaluation);
  }
}

TEST(Report, InvariantUnderClassRelabelling) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng.below(5);
    std::vector<std::vector<std::size_t>> counts(k, std::vector<std::size_t>(k));
    for (auto& row : counts)
      for (auto& c : row) c = rng.below(10);
    counts[0][0] += 1;
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::size_t>(perm));
    auto permuted = counts;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) permuted[perm[i]][perm[j]] = counts[i][j];
    const auto a = report(from_counts(counts));
    const auto b = report(from_counts(permuted));
    EXPECT_NEAR(a.accuracy, b.accuracy, 1e-12);
    EXPECT_NEAR(a.f1_macro, b.f1_macro, 1e-12);
    EXPECT_NEAR(a.f1_weighted, b.f1_weighted, 1e-12);
    EXPECT_NEAR(a.precision_macro, b.precision_macro, 1e-12);
    EXPECT_NEAR(a.recall_macro, b.recall_macro, 1e-12);
  }
}

TEST(Evaluate, AccuracyMatchesDirectCount) {
  Rng rng(5);
  std::vector<std::size_t> g, p;
  for (int i = 0; i < 300; ++i) {
    g.push_back(rng.below(4));
    p.push_back(rng.uniform() < 0.6 ? g.back() : rng.below(4));
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < g.size(); ++i) hits += g[i] == p[i];
  const auto r = evaluate(g, p, {"a", "b", "c", "d"});
  EXPECT_DOUBLE_EQ(r.accuracy, static_cast<double>(hits) / 300.0);
}

TEST(Evaluate, PerEventAccuracy) {
  const std::vector<std::string> events{"fire", "fire", "flood", "flood", "flood"};
  const auto r = evaluate({0, 1, 0, 1, 1}, {0, 0, 0, 1, 0}, {"a", "b"}, events);
  EXPECT_DOUBLE_EQ(r.per_event_accuracy.at("fire").accuracy, 0.5);
  EXPECT_EQ(r.per_event_accuracy.at("fire").support, 2u);
  EXPECT_DOUBLE_EQ(r.per_event_accuracy.at("flood").accuracy, 2.0 / 3.0);
}

TEST(Render, TableColumnsInPercent) {
  const auto r = report(from_counts({{1, 1}, {0, 2}}));
  const auto table = render_table({{"BERT", r}});
  EXPECT_NE(table.find("Prec"), std::string::npos);
  EXPECT_NE(table.find("w-F1"), std::string::npos);
  EXPECT_NE(table.find("75.0"), std::string::npos);
  EXPECT_NE(table.find("73.3"), std::string::npos);
  const auto j = to_json(r);
  EXPECT_DOUBLE_EQ(j["accuracy"].get<double>(), 0.75);
}
