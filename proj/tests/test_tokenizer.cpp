#include <gtest/gtest.h>

#include <filesystem>

#include "eventaware/corpus.hpp"
#include "eventaware/error.hpp"
#include "eventaware/tokenizer.hpp"

using namespace eventaware;

namespace {

Corpus corpus_of(const std::vector<std::string>& texts, std::vector<std::string> events = {"fire"}) {
  Corpus c;
  for (std::size_t i = 0; i < texts.size(); ++i)
    c.examples.push_back({std::to_string(i), texts[i], events[0], "l"});
  c.event_vocab = std::move(events);
  c.label_vocab = {"l"};
  return c;
}

std::vector<std::string> ids_to_tokens(const EncodedInput& in, const Vocab& v) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < in.true_length; ++i) out.push_back(v.token(in.token_ids[i]));
  return out;
}

}  // namespace

TEST(Tokenize, LowercasesAndSplitsPunctuation) {
  EXPECT_EQ(tokenize("After deadly Brazil nightclub fire, safety questions emerge."),
            (std::vector<std::string>{"after", "deadly", "brazil", "nightclub", "fire", ",", "safety",
                                      "questions", "emerge", "."}));
  EXPECT_EQ(tokenize("  #Help!! @user  "),
            (std::vector<std::string>{"#", "help", "!", "!", "@", "user"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(is_punctuation_token(","));
  EXPECT_FALSE(is_punctuation_token("fire"));
}

TEST(BuildVocab, FrequencyRanking) {
  const auto v = build_vocab(corpus_of({"fire fire flood"}), 8);
  ASSERT_TRUE(v.contains("fire"));
  ASSERT_TRUE(v.contains("flood"));
  EXPECT_EQ(v.id("fire"), Vocab::kNumSpecials);
  EXPECT_LT(v.id("fire"), v.id("flood"));
  for (int i = 0; i < Vocab::kNumSpecials; ++i) EXPECT_EQ(v.token(i), kSpecialTokens[i]);
}

TEST(BuildVocab, TiesBrokenLexicographically) {
  const auto v = build_vocab(corpus_of({"berry apple"}, {"zz"}), 16);
  EXPECT_LT(v.id("apple"), v.id("berry"));
}

TEST(BuildVocab, TruncatesToMaxSize) {
  const auto v = build_vocab(corpus_of({"a b c d e f g h i j"}, {"a"}), 5);
  EXPECT_EQ(v.size(), 5u);
  EXPECT_EQ(v.token(4), "a");
}

TEST(BuildVocab, RejectsTooSmallMaximum) {
  EXPECT_THROW(build_vocab(corpus_of({"x"}), 4), Error);
}

TEST(VocabFile, SaveLoadKeepsHash) {
  const auto v = build_vocab(corpus_of({"roof on fire", "stay inside"}), 100);
  const auto path = std::filesystem::temp_directory_path() / "eventaware_vocab_rt.txt";
  v.save(path);
  const auto back = Vocab::load(path);
  EXPECT_EQ(back, v);
  EXPECT_EQ(back.hash_hex(), v.hash_hex());
  std::filesystem::remove(path);
  EXPECT_EQ(v.id("never-seen"), Vocab::kUnk);
}

TEST(EncodeSingle, ShortText) {
  const auto v = build_vocab(corpus_of({"roof on fire"}), 100);
  const auto in = encode_single("roof on fire", v, 128);
  EXPECT_EQ(in.true_length, 5u);
  EXPECT_EQ(ids_to_tokens(in, v),
            (std::vector<std::string>{"[CLS]", "roof", "on", "fire", "[SEP]"}));
  EXPECT_EQ(in.token_ids.size(), 128u);
  for (std::size_t i = 0; i < 128; ++i) {
    EXPECT_EQ(in.segment_ids[i], 0);
    EXPECT_EQ(in.attention_mask[i], i < 5 ? 1 : 0);
    if (i >= 5) {
      EXPECT_EQ(in.token_ids[i], Vocab::kPad);
    }
  }
}

TEST(EncodeSingle, LongTextTruncated) {
  std::string text;
  for (int i = 0; i < 200; ++i) text += "word ";
  const auto v = build_vocab(corpus_of({"word"}), 100);
  const auto in = encode_single(text, v, 128);
  EXPECT_EQ(in.true_length, 128u);
  EXPECT_EQ(in.token_ids[127], Vocab::kSep);
  for (std::size_t i = 1; i < 127; ++i) EXPECT_EQ(v.token(in.token_ids[i]), "word");
}

TEST(EncodeSingle, EmptyText) {
  const auto v = build_vocab(corpus_of({"x"}), 100);
  const auto in = encode_single("", v, 16);
  EXPECT_EQ(in.true_length, 2u);
  EXPECT_EQ(in.token_ids[0], Vocab::kCls);
  EXPECT_EQ(in.token_ids[1], Vocab::kSep);
}

TEST(EncodePair, BertLayout) {
  const std::string text = "After deadly Brazil nightclub fire, safety questions emerge.";
  const auto v = build_vocab(corpus_of({text}), 100);
  const auto in = encode_pair("fire", text, v, 128);
  const std::vector<std::string> expected{"[CLS]", "fire",   "[SEP]",     "after", "deadly",
                                          "brazil", "nightclub", "fire", ",",      "safety",
                                          "questions", "emerge", ".",  "[SEP]"};
  EXPECT_EQ(ids_to_tokens(in, v), expected);
  EXPECT_EQ(event_token_count(in), 1u);
  EXPECT_EQ(in.segment_ids[0], 0);
  EXPECT_EQ(in.segment_ids[1], 0);
  EXPECT_EQ(in.segment_ids[2], 0);
  for (std::size_t i = 3; i < in.true_length; ++i) EXPECT_EQ(in.segment_ids[i], 1);
}

TEST(EncodePair, EmptyText) {
  const auto v = build_vocab(corpus_of({"x"}), 100);
  const auto in = encode_pair("fire", "", v, 16);
  EXPECT_EQ(ids_to_tokens(in, v), (std::vector<std::string>{"[CLS]", "fire", "[SEP]", "[SEP]"}));
  EXPECT_EQ(std::vector<std::int32_t>(in.segment_ids.begin(), in.segment_ids.begin() + 4),
            (std::vector<std::int32_t>{0, 0, 0, 1}));
}

TEST(EncodePair, EventNeverTruncated) {
  std::string text;
  for (int i = 0; i < 300; ++i) text += "storm ";
  const auto v = build_vocab(corpus_of({"storm"}, {"tropical hurricane"}), 100);
  const auto in = encode_pair("tropical hurricane", text, v, 128);
  EXPECT_EQ(in.true_length, 128u);
  EXPECT_EQ(v.token(in.token_ids[1]), "tropical");
  EXPECT_EQ(v.token(in.token_ids[2]), "hurricane");
  EXPECT_EQ(in.token_ids[3], Vocab::kSep);
  std::size_t text_tokens = 0;
  for (std::size_t i = 4; i < 127; ++i) text_tokens += v.token(in.token_ids[i]) == "storm";
  EXPECT_EQ(text_tokens, 128u - (2 + 3));
  EXPECT_EQ(in.token_ids[127], Vocab::kSep);
}

TEST(EncodePair, EmptyEventRejected) {
  const auto v = build_vocab(corpus_of({"x"}), 100);
  try {
    encode_pair("  ", "text", v, 16);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_metadata);
  }
}

TEST(Decode, RestoresLowercasedStreamWithUnk) {
  const auto v = build_vocab(corpus_of({"known words here"}), 100);
  const auto in = encode_single("Known WORDS strange here", v, 32);
  EXPECT_EQ(decode(in, v),
            (std::vector<std::string>{"[CLS]", "known", "words", "[UNK]", "here", "[SEP]"}));
}

TEST(PairPatterns, AlternateRenderings) {
  EXPECT_EQ(render_pair(roberta_pattern(), "fire", "Smoke."), "<s> fire </s> Smoke. </s>");
  EXPECT_EQ(render_pair(t5_pattern(), "fire", "Smoke."), "cbmk context: fire sentence: Smoke.");
  EXPECT_EQ(parse_encoding("event"), Encoding::event_aware);
  EXPECT_EQ(parse_encoding("vanilla"), Encoding::vanilla);
  EXPECT_THROW(parse_encoding("other"), Error);
}
