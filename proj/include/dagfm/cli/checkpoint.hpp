#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "dagfm/data/schema.hpp"
#include "dagfm/interactions/model.hpp"

namespace dagfm {

/// Checkpoint layout:
///   8 bytes   magic "DAGFMCKP"
///   8 bytes   JSON header length, unsigned little-endian
///   header    {"format_version", "model_kind", "spec", "schema"?, "params": [{name, shape, dtype, trainable}]}
///   payload   every parameter in manifest order as little-endian IEEE-754 binary64
inline constexpr std::string_view kCheckpointMagic = "DAGFMCKP";
inline constexpr int kCheckpointVersion = 1;

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  std::optional<FieldSchema> schema;
};

std::string serialize_checkpoint(const Model& model, const FieldSchema* schema = nullptr);
// FormatError on a bad magic, a version mismatch, a corrupt header, a
// manifest that does not match the declared architecture, or a payload whose
// length differs from the manifest.
LoadedCheckpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const Model& model, const std::filesystem::path& path, const FieldSchema* schema = nullptr);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dagfm
