#include "eventaware/tokenizer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "eventaware/error.hpp"

namespace eventaware {
namespace {

bool is_ascii_punct(unsigned char c) { return c < 128 && std::ispunct(c) != 0; }
bool is_ascii_space(unsigned char c) { return c < 128 && std::isspace(c) != 0; }

std::vector<std::int32_t> ids_of(const std::vector<std::string>& tokens, const Vocab& vocab) {
  std::vector<std::int32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(t));
  return ids;
}

EncodedInput pack(const std::vector<std::int32_t>& ids, const std::vector<std::int32_t>& segs,
                  std::size_t max_len) {
  EncodedInput out;
  out.token_ids.assign(max_len, Vocab::kPad);
  out.segment_ids.assign(max_len, 0);
  out.attention_mask.assign(max_len, 0);
  out.true_length = ids.size();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.token_ids[i] = ids[i];
    out.segment_ids[i] = segs[i];
    out.attention_mask[i] = 1;
  }
  return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_ascii_space(c)) {
      flush();
    } else if (is_ascii_punct(c)) {
      flush();
      tokens.emplace_back(1, ch);
    } else {
      current += c < 128 ? static_cast<char>(std::tolower(c)) : ch;
    }
  }
  flush();
  return tokens;
}

bool is_punctuation_token(std::string_view token) {
  return !token.empty() && std::all_of(token.begin(), token.end(), [](char c) {
    return is_ascii_punct(static_cast<unsigned char>(c));
  });
}

Vocab::Vocab() : Vocab(std::vector<std::string>(std::begin(kSpecialTokens), std::end(kSpecialTokens))) {}

Vocab::Vocab(std::vector<std::string> tokens) : id_to_token_(std::move(tokens)) {
  if (id_to_token_.size() < kNumSpecials)
    throw Error(ErrorKind::parse, "vocabulary must start with the four special tokens");
  for (std::int32_t i = 0; i < kNumSpecials; ++i)
    if (id_to_token_[static_cast<std::size_t>(i)] != kSpecialTokens[i])
      throw Error(ErrorKind::parse, "vocabulary id " + std::to_string(i) + " must be " +
                                        std::string(kSpecialTokens[i]));
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
    const auto& t = id_to_token_[i];
    if (t.empty() || t.find_first_of(" \t\n\r") != std::string::npos)
      throw Error(ErrorKind::parse, "invalid vocabulary token at id " + std::to_string(i));
    if (!token_to_id_.emplace(t, static_cast<std::int32_t>(i)).second)
      throw Error(ErrorKind::duplicate_id, "duplicate vocabulary token '" + t + "'");
  }
}

std::int32_t Vocab::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return token_to_id_.contains(std::string(token));
}

const std::string& Vocab::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size())
    throw Error(ErrorKind::index, "token id " + std::to_string(id) + " out of range");
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::uint64_t Vocab::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : id_to_token_) {
    for (char c : t) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    h ^= static_cast<unsigned char>('\n');
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string Vocab::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write vocabulary " + path.string());
  for (const auto& t : id_to_token_) out << t << '\n';
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return Vocab(std::move(tokens));
}

Vocab build_vocab(const Corpus& corpus, std::size_t max_size, std::size_t min_freq) {
  if (max_size <= static_cast<std::size_t>(Vocab::kNumSpecials))
    throw Error(ErrorKind::parameter, "vocabulary max_size must exceed the 4 special tokens");
  std::map<std::string, std::size_t> counts;
  for (const auto& ex : corpus.examples)
    for (auto& t : tokenize(ex.text)) ++counts[t];
  std::map<std::string, bool> is_event;
  for (const auto& e : corpus.event_vocab)
    for (auto& t : tokenize(e)) {
      ++counts[t];
      is_event[t] = true;
    }

  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [t, c] : counts) {
    if (std::find(std::begin(kSpecialTokens), std::end(kSpecialTokens), t) != std::end(kSpecialTokens))
      continue;
    if (c >= min_freq || is_event.contains(t)) ranked.emplace_back(t, c);
  }
  // std::map iteration is lexicographic, so a stable sort on count alone
  // leaves equal-count tokens in lexicographic order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t keep = std::min(ranked.size(), max_size - Vocab::kNumSpecials);

  std::vector<std::string> tokens(std::begin(kSpecialTokens), std::end(kSpecialTokens));
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(ranked[i].first);
  return Vocab(std::move(tokens));
}

EncodedInput encode_single(std::string_view text, const Vocab& vocab, std::size_t max_len) {
  if (max_len < 3) throw Error(ErrorKind::parameter, "max_len must be at least 3");
  auto text_ids = ids_of(tokenize(text), vocab);
  text_ids.resize(std::min(text_ids.size(), max_len - 2));
  std::vector<std::int32_t> ids{Vocab::kCls};
  ids.insert(ids.end(), text_ids.begin(), text_ids.end());
  ids.push_back(Vocab::kSep);
  return pack(ids, std::vector<std::int32_t>(ids.size(), 0), max_len);
}

EncodedInput encode_pair(std::string_view event, std::string_view text, const Vocab& vocab,
                         std::size_t max_len) {
  if (max_len < 5) throw Error(ErrorKind::parameter, "max_len must be at least 5");
  const auto event_ids = ids_of(tokenize(event), vocab);
  if (event_ids.empty())
    throw Error(ErrorKind::invalid_metadata, "event '" + std::string(event) + "' has no tokens");
  if (event_ids.size() + 3 > max_len)
    throw Error(ErrorKind::invalid_metadata, "event '" + std::string(event) + "' does not fit in max_len");
  auto text_ids = ids_of(tokenize(text), vocab);
  text_ids.resize(std::min(text_ids.size(), max_len - event_ids.size() - 3));

  std::vector<std::int32_t> ids{Vocab::kCls};
  ids.insert(ids.end(), event_ids.begin(), event_ids.end());
  ids.push_back(Vocab::kSep);
  std::vector<std::int32_t> segs(ids.size(), 0);
  ids.insert(ids.end(), text_ids.begin(), text_ids.end());
  ids.push_back(Vocab::kSep);
  segs.resize(ids.size(), 1);
  return pack(ids, segs, max_len);
}

Encoding parse_encoding(std::string_view s) {
  if (s == "vanilla") return Encoding::vanilla;
  if (s == "event" || s == "event_aware" || s == "event-aware") return Encoding::event_aware;
  throw Error(ErrorKind::parameter, "unknown encoding '" + std::string(s) + "'");
}

std::string_view to_string(Encoding e) {
  return e == Encoding::vanilla ? "vanilla" : "event_aware";
}

EncodedInput encode_example(Encoding encoding, std::string_view event, std::string_view text,
                            const Vocab& vocab, std::size_t max_len) {
  return encoding == Encoding::vanilla ? encode_single(text, vocab, max_len)
                                       : encode_pair(event, text, vocab, max_len);
}

std::size_t event_token_count(const EncodedInput& input) {
  // Only event-aware encodings end in segment 1.
  if (input.true_length == 0 || input.segment_ids[input.true_length - 1] != 1) return 0;
  std::size_t n = 0;
  while (1 + n < input.true_length && input.token_ids[1 + n] != Vocab::kSep) ++n;
  return n;
}

std::vector<std::string> decode(const EncodedInput& input, const Vocab& vocab) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < input.true_length; ++i) out.push_back(vocab.token(input.token_ids[i]));
  return out;
}

PairPattern bert_pattern() { return {"[CLS] ", " [SEP] ", " [SEP]"}; }
PairPattern roberta_pattern() { return {"<s> ", " </s> ", " </s>"}; }
PairPattern t5_pattern() { return {"cbmk context: ", " sentence: ", ""}; }

std::string render_pair(const PairPattern& pattern, std::string_view event, std::string_view text) {
  std::string out = pattern.prefix;
  out += event;
  out += pattern.between;
  out += text;
  out += pattern.suffix;
  return out;
}

}  // namespace eventaware
