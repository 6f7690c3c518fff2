#include "eventaware/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "eventaware/error.hpp"
#include "json.hpp"

namespace eventaware {
namespace {

constexpr std::array<char, 8> kMagic{'E', 'V', 'A', 'W', 'M', 'D', 'L', '\0'};

void put_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 4);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8))
    throw Error(ErrorKind::parse, "checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4))
    throw Error(ErrorKind::parse, "checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

nlohmann::ordered_json config_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"d_model", c.d_model},     {"n_heads", c.n_heads},
          {"n_layers", c.n_layers},     {"d_ff", c.d_ff},           {"max_len", c.max_len},
          {"n_classes", c.n_classes},   {"n_segments", c.n_segments},
          {"dropout_rate", c.dropout_rate}, {"ln_epsilon", c.ln_epsilon}};
}

}  // namespace

void write_model(std::ostream& out, const Model& model) {
  const auto& c = model.config;
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kCheckpointVersion);
  for (std::size_t v : {c.vocab_size, c.d_model, c.n_heads, c.n_layers, c.d_ff, c.max_len,
                        c.n_classes, c.n_segments})
    put_u64(out, v);
  put_f64(out, c.dropout_rate);
  put_f64(out, c.ln_epsilon);
  for (const auto& t : model.params.tensors())
    for (Eigen::Index i = 0; i < t.tensor->size(); ++i) put_f64(out, t.tensor->data()[i]);
}

Model read_model(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw Error(ErrorKind::parse, "not a model checkpoint (bad magic)");
  const auto version = get_u32(in);
  if (version != kCheckpointVersion)
    throw Error(ErrorKind::compatibility, "unsupported checkpoint version " + std::to_string(version));
  ModelConfig c;
  for (std::size_t* v : {&c.vocab_size, &c.d_model, &c.n_heads, &c.n_layers, &c.d_ff, &c.max_len,
                         &c.n_classes, &c.n_segments})
    *v = static_cast<std::size_t>(get_u64(in));
  c.dropout_rate = get_f64(in);
  c.ln_epsilon = get_f64(in);
  c.validate();
  Model m{c, Parameters::zeros(c)};
  for (auto& t : m.params.tensors())
    for (Eigen::Index i = 0; i < t.tensor->size(); ++i) t.tensor->data()[i] = get_f64(in);
  if (in.peek() != std::char_traits<char>::eof())
    throw Error(ErrorKind::parse, "trailing bytes after checkpoint parameters");
  return m;
}

std::string meta_to_json(const CheckpointMeta& meta) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["config"] = config_json(meta.config);
  j["encoding"] = std::string(to_string(meta.encoding));
  j["vocab_hash"] = meta.vocab_hash;
  j["labels"] = meta.labels;
  j["events"] = meta.events;
  return j.dump(2) + "\n";
}

CheckpointMeta meta_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    CheckpointMeta m;
    const auto& c = j.at("config");
    m.config.vocab_size = c.at("vocab_size");
    m.config.d_model = c.at("d_model");
    m.config.n_heads = c.at("n_heads");
    m.config.n_layers = c.at("n_layers");
    m.config.d_ff = c.at("d_ff");
    m.config.max_len = c.at("max_len");
    m.config.n_classes = c.at("n_classes");
    m.config.n_segments = c.at("n_segments");
    m.config.dropout_rate = c.at("dropout_rate");
    m.config.ln_epsilon = c.at("ln_epsilon");
    m.encoding = parse_encoding(j.at("encoding").get<std::string>());
    m.vocab_hash = j.at("vocab_hash");
    m.labels = j.at("labels").get<std::vector<std::string>>();
    m.events = j.at("events").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("checkpoint sidecar: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const CheckpointMeta& meta) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write checkpoint " + path.string());
    write_model(out, model);
    if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
  }
  std::ofstream side(path.string() + ".json", std::ios::binary);
  if (!side) throw Error(ErrorKind::io, "cannot write checkpoint sidecar for " + path.string());
  side << meta_to_json(meta);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open checkpoint " + path.string());
  Model model = read_model(in);
  std::ifstream side(path.string() + ".json", std::ios::binary);
  if (!side) throw Error(ErrorKind::io, "missing checkpoint sidecar " + path.string() + ".json");
  std::stringstream ss;
  ss << side.rdbuf();
  auto meta = meta_from_json(ss.str());
  if (!(meta.config == model.config))
    throw Error(ErrorKind::compatibility, "checkpoint sidecar config disagrees with binary header");
  if (meta.labels.size() != model.config.n_classes)
    throw Error(ErrorKind::compatibility, "checkpoint label list does not match n_classes");
  return {std::move(model), std::move(meta)};
}

}  // namespace eventaware
