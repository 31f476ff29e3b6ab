#pragma once

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "semrel/encoder.hpp"

namespace semrel {

enum class ModelKind { kBiEncoder, kCrossEncoder };

std::string_view to_string(ModelKind kind);  // "biencoder" | "crossenc"
ModelKind parse_model_kind(std::string_view name);

// Scalar regression head of the cross-encoder: y = w . s + c.
struct RegressionHead {
  std::vector<double> weight;
  double bias = 0.5;
};

struct Manifest {
  int schema_version = 1;
  ModelKind model_kind = ModelKind::kBiEncoder;
  TokenizerConfig tokenizer;
  std::size_t dim = 0;
  Pooling pooling = Pooling::kMean;
  std::size_t epoch = 0;
  std::optional<double> dev_spearman;  // absent when not evaluated or undefined
  std::optional<double> train_loss;
  nlohmann::json config = nlohmann::json::object();
};

// Parameter values are held at float32 precision (the on-disk width), so a
// checkpoint predicts the same after a save/load round trip.
struct Checkpoint {
  Manifest manifest;
  EncoderParams encoder;
  std::optional<RegressionHead> head;
};

inline constexpr int kCheckpointSchemaVersion = 1;

// Copies the parameters into a checkpoint, rounding every value to float32.
Checkpoint make_checkpoint(Manifest manifest, const EncoderParams& encoder,
                           const RegressionHead* head = nullptr);

nlohmann::json manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& j);

// Writes <dir>/manifest.json and <dir>/params.bin (E, W, b[, head.w, head.c];
// row-major little-endian IEEE-754 float32).
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace semrel
