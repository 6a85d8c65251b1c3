#include "dagfm/cli/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dagfm/model_factory.hpp"
#include "dagfm/numcore/errors.hpp"

namespace dagfm {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

std::uint64_t get_u64(std::string_view in) {
  std::uint64_t v = 0;
  std::memcpy(&v, in.data(), 8);
  return v;
}

}  // namespace

std::string serialize_checkpoint(const Model& model, const FieldSchema* schema) {
  const ParamStore& store = model.params();
  nlohmann::json manifest = nlohmann::json::array();
  for (std::size_t i = 0; i < store.size(); ++i) {
    const ParamHandle h{i};
    manifest.push_back({{"name", store.name(h)},
                        {"shape", store.value(h).shape()},
                        {"dtype", "f64"},
                        {"trainable", store.trainable(h)}});
  }
  nlohmann::json header{{"format_version", kCheckpointVersion},
                        {"model_kind", to_string(model.spec().kind)},
                        {"spec", model.spec().to_json()},
                        {"params", manifest}};
  if (schema != nullptr) header["schema"] = schema->to_json();
  const std::string text = header.dump();

  std::string out(kCheckpointMagic);
  put_u64(out, text.size());
  out += text;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto values = store.value(ParamHandle{i}).data();
    out.append(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(double));
  }
  return out;
}

LoadedCheckpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < kCheckpointMagic.size() + 8 || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
    throw FormatError("not a checkpoint file (bad magic)");
  }
  bytes.remove_prefix(kCheckpointMagic.size());
  const std::uint64_t header_len = get_u64(bytes);
  bytes.remove_prefix(8);
  if (header_len > bytes.size()) throw FormatError("checkpoint header is truncated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupt checkpoint header: ") + e.what());
  }
  bytes.remove_prefix(header_len);

  LoadedCheckpoint loaded;
  std::size_t expected = 0;
  try {
    const int version = header.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
      throw FormatError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kCheckpointVersion) + ")");
    }
    const ModelSpec spec = ModelSpec::from_json(header.at("spec"));
    if (header.at("model_kind").get<std::string>() != to_string(spec.kind)) {
      throw FormatError("checkpoint model_kind disagrees with its spec");
    }
    loaded.model = make_model(spec, 0);
    if (header.contains("schema")) loaded.schema = FieldSchema::from_json(header.at("schema"));

    const auto& manifest = header.at("params");
    ParamStore& store = loaded.model->params();
    if (!manifest.is_array() || manifest.size() != store.size()) {
      throw FormatError("checkpoint manifest lists " + std::to_string(manifest.size()) + " parameters, the model has " +
                        std::to_string(store.size()));
    }
    for (std::size_t i = 0; i < store.size(); ++i) {
      const ParamHandle h{i};
      const auto& entry = manifest[i];
      if (entry.at("name").get<std::string>() != store.name(h) ||
          entry.at("shape").get<Shape>() != store.value(h).shape() || entry.at("dtype").get<std::string>() != "f64") {
        throw FormatError("checkpoint manifest entry " + std::to_string(i) + " (" +
                          entry.at("name").get<std::string>() + ") does not match the model");
      }
      store.set_trainable(h, entry.at("trainable").get<bool>());
      expected += store.value(h).size();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupt checkpoint manifest: ") + e.what());
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("corrupt checkpoint manifest: ") + e.what());
  }

  if (bytes.size() != expected * sizeof(double)) {
    throw FormatError("checkpoint payload holds " + std::to_string(bytes.size()) + " bytes, manifest needs " +
                      std::to_string(expected * sizeof(double)));
  }
  ParamStore& store = loaded.model->params();
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto values = store.value(ParamHandle{i}).data();
    std::memcpy(values.data(), bytes.data(), values.size() * sizeof(double));
    bytes.remove_prefix(values.size() * sizeof(double));
  }
  return loaded;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path, const FieldSchema* schema) {
  const std::string bytes = serialize_checkpoint(model, schema);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("failed writing checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace dagfm
