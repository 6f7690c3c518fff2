#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eventaware/corpus.hpp"

namespace eventaware {

/// Lowercased word-level split. Whitespace separates words and every ASCII
/// punctuation character becomes a token of its own.
std::vector<std::string> tokenize(std::string_view text);

/// True when every byte of the token is ASCII punctuation.
bool is_punctuation_token(std::string_view token);

class Vocab {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kCls = 2;
  static constexpr std::int32_t kSep = 3;
  static constexpr std::int32_t kNumSpecials = 4;

  /// Specials only.
  Vocab();
  /// tokens[i] gets id i; the first four must be the special tokens.
  explicit Vocab(std::vector<std::string> tokens);

  std::int32_t id(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string& token(std::int32_t id) const;
  std::size_t size() const { return id_to_token_.size(); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  /// FNV-1a over the serialized form; used to pair checkpoints with vocabularies.
  std::uint64_t hash() const;
  std::string hash_hex() const;

  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.id_to_token_ == b.id_to_token_;
  }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::int32_t> token_to_id_;
};

inline constexpr std::string_view kSpecialTokens[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};

/// Frequency-ranked vocabulary over the corpus texts plus the tokens of every
/// event-type string. Event tokens are exempt from min_freq.
Vocab build_vocab(const Corpus& corpus, std::size_t max_size, std::size_t min_freq = 1);

struct EncodedInput {
  std::vector<std::int32_t> token_ids;
  std::vector<std::int32_t> segment_ids;
  std::vector<std::int32_t> attention_mask;
  std::size_t true_length = 0;

  std::size_t max_len() const { return token_ids.size(); }
  friend bool operator==(const EncodedInput&, const EncodedInput&) = default;
};

/// [CLS] text [SEP], all segment 0.
EncodedInput encode_single(std::string_view text, const Vocab& vocab, std::size_t max_len = 128);

/// [CLS] event [SEP] text [SEP]; segment 0 through the first [SEP], 1 after.
/// Only the text is truncated.
EncodedInput encode_pair(std::string_view event, std::string_view text, const Vocab& vocab,
                         std::size_t max_len = 128);

enum class Encoding { vanilla, event_aware };

Encoding parse_encoding(std::string_view s);
std::string_view to_string(Encoding e);

/// Dispatches on the encoding mode; vanilla ignores the event.
EncodedInput encode_example(Encoding encoding, std::string_view event, std::string_view text,
                            const Vocab& vocab, std::size_t max_len);

/// Number of tokens the event occupies; they sit at positions 1..n.
std::size_t event_token_count(const EncodedInput& input);

/// Tokens of the real (unpadded) positions, specials included.
std::vector<std::string> decode(const EncodedInput& input, const Vocab& vocab);

/// Surface-level dual-segment patterns for the three model families.
struct PairPattern {
  std::string prefix;
  std::string between;
  std::string suffix;
};

PairPattern bert_pattern();
PairPattern roberta_pattern();
PairPattern t5_pattern();

/// e.g. "[CLS] fire [SEP] After deadly ... emerge. [SEP]" for the BERT pattern.
std::string render_pair(const PairPattern& pattern, std::string_view event, std::string_view text);

}  // namespace eventaware
