#include "semrel/checkpoint.hpp"

#include <bit>
#include <cstdint>

#include "semrel/corpus.hpp"
#include "semrel/error.hpp"

namespace semrel {

namespace {

using nlohmann::json;

double to_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

struct BlobLayout {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t count() const {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    return n;
  }
};

std::vector<BlobLayout> layout_for(const Manifest& m) {
  const std::size_t v = m.tokenizer.vocab_size;
  const std::size_t d = m.dim;
  std::vector<BlobLayout> out{{"E", {v, d}}, {"W", {d, d}}, {"b", {d}}};
  if (m.model_kind == ModelKind::kCrossEncoder) {
    out.push_back({"head.w", {d}});
    out.push_back({"head.c", {1}});
  }
  return out;
}

void put_f32(std::string& out, double x) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(x));
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double get_f32(std::string_view in, std::size_t index) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[index * 4 + i])) << (8 * i);
  }
  return static_cast<double>(std::bit_cast<float>(bits));
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::kBiEncoder ? "biencoder" : "crossenc";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "biencoder") return ModelKind::kBiEncoder;
  if (name == "crossenc") return ModelKind::kCrossEncoder;
  throw Error(ErrorCode::kInvalidCheckpoint, "unknown model kind '" + std::string(name) + "'");
}

Checkpoint make_checkpoint(Manifest manifest, const EncoderParams& encoder, const RegressionHead* head) {
  Checkpoint ck;
  manifest.dim = encoder.dim();
  manifest.tokenizer.vocab_size = encoder.vocab_size();
  manifest.model_kind = head ? ModelKind::kCrossEncoder : ModelKind::kBiEncoder;
  ck.manifest = std::move(manifest);
  ck.encoder = encoder;
  for (auto& x : ck.encoder.embeddings.data) x = to_f32(x);
  for (auto& x : ck.encoder.projection.data) x = to_f32(x);
  for (auto& x : ck.encoder.bias) x = to_f32(x);
  if (head) {
    RegressionHead h = *head;
    for (auto& x : h.weight) x = to_f32(x);
    h.bias = to_f32(h.bias);
    ck.head = std::move(h);
  }
  return ck;
}

json manifest_to_json(const Manifest& m) {
  json j;
  j["schema_version"] = m.schema_version;
  j["model_kind"] = std::string(to_string(m.model_kind));
  j["d"] = m.dim;
  j["V"] = m.tokenizer.vocab_size;
  j["hash_seed"] = m.tokenizer.hash_seed;
  j["lowercase"] = m.tokenizer.lowercase;
  j["pooling"] = std::string(to_string(m.pooling));
  j["epoch"] = m.epoch;
  j["dev_spearman"] = m.dev_spearman ? json(*m.dev_spearman) : json(nullptr);
  j["train_loss"] = m.train_loss ? json(*m.train_loss) : json(nullptr);
  j["config"] = m.config;
  j["dtype"] = "float32-le";
  json params = json::array();
  for (const auto& blob : layout_for(m)) params.push_back({{"name", blob.name}, {"shape", blob.shape}});
  j["parameters"] = params;
  return j;
}

Manifest manifest_from_json(const json& j) {
  try {
    Manifest m;
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kCheckpointSchemaVersion) {
      throw Error(ErrorCode::kInvalidCheckpoint,
                  "unsupported schema_version " + std::to_string(m.schema_version));
    }
    m.model_kind = parse_model_kind(j.at("model_kind").get<std::string>());
    m.dim = j.at("d").get<std::size_t>();
    m.tokenizer.vocab_size = j.at("V").get<std::size_t>();
    m.tokenizer.hash_seed = j.at("hash_seed").get<std::uint64_t>();
    m.tokenizer.lowercase = j.value("lowercase", true);
    m.pooling = parse_pooling(j.at("pooling").get<std::string>());
    m.epoch = j.at("epoch").get<std::size_t>();
    if (j.contains("dev_spearman") && !j["dev_spearman"].is_null()) m.dev_spearman = j["dev_spearman"].get<double>();
    if (j.contains("train_loss") && !j["train_loss"].is_null()) m.train_loss = j["train_loss"].get<double>();
    m.config = j.value("config", json::object());
    if (j.contains("parameters")) {
      const auto expected = layout_for(m);
      const auto& declared = j["parameters"];
      bool ok = declared.size() == expected.size();
      for (std::size_t i = 0; ok && i < expected.size(); ++i) {
        ok = declared[i].at("name").get<std::string>() == expected[i].name &&
             declared[i].at("shape").get<std::vector<std::size_t>>() == expected[i].shape;
      }
      if (!ok) throw Error(ErrorCode::kInvalidCheckpoint, "declared parameters disagree with d/V/model_kind");
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidCheckpoint, std::string("bad manifest: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& dir) {
  const auto& m = ck.manifest;
  if (ck.encoder.dim() != m.dim || ck.encoder.vocab_size() != m.tokenizer.vocab_size ||
      ck.head.has_value() != (m.model_kind == ModelKind::kCrossEncoder)) {
    throw Error(ErrorCode::kInvalidCheckpoint, "manifest does not describe the parameters");
  }
  std::string blob;
  blob.reserve(4 * (ck.encoder.parameter_count() + m.dim + 1));
  for (double x : ck.encoder.embeddings.data) put_f32(blob, x);
  for (double x : ck.encoder.projection.data) put_f32(blob, x);
  for (double x : ck.encoder.bias) put_f32(blob, x);
  if (ck.head) {
    for (double x : ck.head->weight) put_f32(blob, x);
    put_f32(blob, ck.head->bias);
  }
  write_file(dir / "manifest.json", manifest_to_json(m).dump(2) + "\n");
  write_file(dir / "params.bin", blob);
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  json j;
  try {
    j = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidCheckpoint, dir.string() + "/manifest.json: " + e.what());
  }
  Checkpoint ck;
  ck.manifest = manifest_from_json(j);
  const auto& m = ck.manifest;
  std::size_t count = 0;
  for (const auto& blob : layout_for(m)) count += blob.count();
  const std::string bytes = read_file(dir / "params.bin");
  if (bytes.size() != 4 * count) {
    throw Error(ErrorCode::kInvalidCheckpoint, "params.bin holds " + std::to_string(bytes.size()) +
                                                   " bytes, manifest declares " + std::to_string(4 * count));
  }
  ck.encoder = EncoderParams::zeros(m.tokenizer.vocab_size, m.dim);
  std::size_t k = 0;
  for (auto& x : ck.encoder.embeddings.data) x = get_f32(bytes, k++);
  for (auto& x : ck.encoder.projection.data) x = get_f32(bytes, k++);
  for (auto& x : ck.encoder.bias) x = get_f32(bytes, k++);
  if (m.model_kind == ModelKind::kCrossEncoder) {
    RegressionHead head;
    head.weight.resize(m.dim);
    for (auto& x : head.weight) x = get_f32(bytes, k++);
    head.bias = get_f32(bytes, k++);
    ck.head = std::move(head);
  }
  return ck;
}

}  // namespace semrel
