#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include "eventaware/corpus.hpp"
#include "eventaware/diagnostics.hpp"
#include "eventaware/error.hpp"

using namespace eventaware;

namespace {

Corpus parse(const std::string& text) {
  std::istringstream in(text);
  return read_corpus_tsv(in);
}

Corpus make_corpus(const std::vector<std::pair<std::string, int>>& event_counts) {
  Corpus c;
  std::set<std::string> events;
  int next = 0;
  for (const auto& [event, n] : event_counts) {
    events.insert(event);
    for (int i = 0; i < n; ++i) {
      c.examples.push_back({std::to_string(next), "text " + std::to_string(next), event,
                            next % 2 ? "a" : "b"});
      ++next;
    }
  }
  c.event_vocab.assign(events.begin(), events.end());
  c.label_vocab = {"a", "b"};
  return c;
}

template <typename Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an eventaware::Error";
  return ErrorKind::parse;
}

}  // namespace

TEST(CorpusReader, ParsesRowsAndSortsVocabularies) {
  const auto c = parse(
      "id\tevent\tlabel\ttext\n"
      "1\tfire\tnot_humanitarian\troof on fire\n"
      "2\tflood\tcaution_and_advice\tstay inside\n");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.event_vocab, (std::vector<std::string>{"fire", "flood"}));
  EXPECT_EQ(c.label_vocab, (std::vector<std::string>{"caution_and_advice", "not_humanitarian"}));
  EXPECT_EQ(c.examples[0].text, "roof on fire");
  EXPECT_EQ(c.examples[1].event_type, "flood");
  EXPECT_NO_THROW(c.validate());
}

TEST(CorpusReader, EscapedTabsRoundTrip) {
  Corpus c;
  c.examples.push_back({"x1", "left\tright \\ back\nslash", "fire", "a"});
  c.event_vocab = {"fire"};
  c.label_vocab = {"a"};
  std::ostringstream out;
  write_corpus_tsv(out, c);
  const auto back = parse(out.str());
  EXPECT_EQ(back.examples[0].text, c.examples[0].text);
  EXPECT_EQ(back, c);
}

TEST(CorpusReader, HeaderOnlyIsEmptyCorpus) {
  EXPECT_EQ(kind_of([] { parse("id\tevent\tlabel\ttext\n"); }), ErrorKind::empty_corpus);
}

TEST(CorpusReader, MalformedRowNamesLine) {
  try {
    parse("id\tevent\tlabel\ttext\n1\tfire\ta\tok\n2\tfire\tonly three\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(CorpusReader, DuplicateIdsRejected) {
  EXPECT_EQ(kind_of([] { parse("id\tevent\tlabel\ttext\n1\tfire\ta\tx\n1\tflood\tb\ty\n"); }),
            ErrorKind::duplicate_id);
}

TEST(OfficialSplit, RoutesByAssignment) {
  const auto c = make_corpus({{"fire", 4}});
  const std::map<std::string, SplitPart> a{
      {"0", SplitPart::train}, {"1", SplitPart::train}, {"2", SplitPart::dev}, {"3", SplitPart::test}};
  const auto s = split_official(c, a);
  EXPECT_EQ(s.train.size(), 2u);
  EXPECT_EQ(s.dev.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
  EXPECT_EQ(s.dev.examples[0].id, "2");
}

TEST(OfficialSplit, AllTrainLeavesOthersEmpty) {
  const auto c = make_corpus({{"fire", 3}});
  std::map<std::string, SplitPart> a;
  for (const auto& ex : c.examples) a[ex.id] = SplitPart::train;
  const auto s = split_official(c, a);
  EXPECT_EQ(s.train.size(), 3u);
  EXPECT_TRUE(s.dev.empty());
  EXPECT_TRUE(s.test.empty());
}

TEST(OfficialSplit, MissingAssignmentNamesId) {
  const auto c = make_corpus({{"fire", 4}});
  const std::map<std::string, SplitPart> a{
      {"0", SplitPart::train}, {"1", SplitPart::train}, {"2", SplitPart::dev}};
  try {
    split_official(c, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::missing_assignment);
    EXPECT_NE(std::string(e.what()).find("'3'"), std::string::npos);
  }
}

TEST(SplitFiles, RoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "eventaware_splits_rt.tsv";
  const std::vector<std::pair<std::string, SplitPart>> rows{
      {"a", SplitPart::train}, {"b", SplitPart::dev}, {"c", SplitPart::test}};
  save_split_assignments(path, rows);
  const auto back = load_split_assignments(path);
  EXPECT_EQ(back.at("a"), SplitPart::train);
  EXPECT_EQ(back.at("b"), SplitPart::dev);
  EXPECT_EQ(back.at("c"), SplitPart::test);
  std::filesystem::remove(path);
}

TEST(LoetoSplits, QuarterOfHeldOutGoesToDev) {
  const auto c = make_corpus({{"fire", 8}, {"flood", 4}});
  const auto folds = loeto_splits(c, 0.25, 11);
  ASSERT_EQ(folds.size(), 2u);
  const auto& fire = folds[0];
  EXPECT_EQ(fire.held_out_event, "fire");
  EXPECT_EQ(fire.splits.train.size(), 4u);
  EXPECT_EQ(fire.splits.dev.size(), 2u);
  EXPECT_EQ(fire.splits.test.size(), 6u);
  for (const auto& ex : fire.splits.train.examples) EXPECT_EQ(ex.event_type, "flood");
  for (const auto& ex : fire.splits.dev.examples) EXPECT_EQ(ex.event_type, "fire");
}

TEST(LoetoSplits, ZeroDevFraction) {
  const auto c = make_corpus({{"fire", 8}, {"flood", 4}});
  for (const auto& fold : loeto_splits(c, 0.0, 1)) {
    EXPECT_TRUE(fold.splits.dev.empty());
    EXPECT_EQ(fold.splits.test.size(), fold.held_out_event == "fire" ? 8u : 4u);
  }
}

TEST(LoetoSplits, PartitionInvariantsAndDeterminism) {
  const auto c = make_corpus({{"earthquake", 13}, {"fire", 9}, {"flood", 21}});
  const auto a = loeto_splits(c, 0.25, 99);
  const auto b = loeto_splits(c, 0.25, 99);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t f = 0; f < a.size(); ++f) {
    std::multiset<std::string> ids;
    for (const auto* part : {&a[f].splits.train, &a[f].splits.dev, &a[f].splits.test})
      for (const auto& ex : part->examples) ids.insert(ex.id);
    EXPECT_EQ(ids.size(), c.size());
    EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), c.size());
    for (const auto& ex : a[f].splits.train.examples) EXPECT_NE(ex.event_type, a[f].held_out_event);
    EXPECT_EQ(a[f].splits.dev.examples, b[f].splits.dev.examples);
    EXPECT_EQ(a[f].splits.test.examples, b[f].splits.test.examples);
  }
}

TEST(LoetoSplits, SingleEventRejected) {
  EXPECT_EQ(kind_of([] { loeto_splits(make_corpus({{"fire", 5}}), 0.25, 0); }),
            ErrorKind::parameter);
}

TEST(LoetoSplits, EventWithoutExamplesIsSkippedWithWarning) {
  auto c = make_corpus({{"fire", 4}, {"flood", 4}});
  c.event_vocab.push_back("volcano");
  diag::ScopedCapture capture;
  const auto folds = loeto_splits(c, 0.25, 0);
  EXPECT_EQ(folds.size(), 2u);
  ASSERT_EQ(capture.warnings().size(), 1u);
  EXPECT_EQ(capture.warnings()[0].code, "loeto_empty_event");
}

TEST(LabelDistribution, Counting) {
  std::vector<Example> ex{{"1", "t", "e", "a"}, {"2", "t", "e", "a"}, {"3", "t", "e", "b"}};
  const auto d = label_distribution(ex, {"a", "b", "c"}, 0.0);
  EXPECT_DOUBLE_EQ(d.at("a"), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(d.at("b"), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(d.at("c"), 0.0);
}

TEST(LabelDistribution, SmoothedEmptyIsUniform) {
  const auto d = label_distribution({}, {"a", "b"}, 1.0);
  EXPECT_DOUBLE_EQ(d.at("a"), 0.5);
  EXPECT_DOUBLE_EQ(d.at("b"), 0.5);
}

TEST(LabelDistribution, BalancedHalves) {
  std::vector<Example> ex;
  for (int i = 0; i < 100; ++i) ex.push_back({std::to_string(i), "t", "e", i < 50 ? "a" : "b"});
  const auto d = label_distribution(ex, {"a", "b"});
  EXPECT_DOUBLE_EQ(d.at("a"), 0.5);
  EXPECT_DOUBLE_EQ(d.at("b"), 0.5);
}

TEST(LabelDistribution, EmptyUnsmoothedIsUndefined) {
  EXPECT_EQ(kind_of([] { label_distribution({}, {"a", "b"}, 0.0); }),
            ErrorKind::undefined_distribution);
}

TEST(LabelDistribution, PerEventSharesSumToOne) {
  const auto c = make_corpus({{"fire", 3}, {"flood", 5}});
  const auto d = distributions_by_event(c);
  EXPECT_EQ(d.event_count.at("fire"), 3u);
  EXPECT_DOUBLE_EQ(d.event_share.at("fire") + d.event_share.at("flood"), 1.0);
  for (const auto& [event, dist] : d.per_event) {
    double s = 0;
    for (double p : dist.probs) s += p;
    EXPECT_NEAR(s, 1.0, 1e-12) << event;
  }
}
