#include "splicegan/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "splicegan/errors.hpp"

namespace splicegan {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr char kMagic[8] = {'S', 'P', 'G', 'C', 'K', 'P', 'T', '\0'};
constexpr uint32_t kVersion = 1;

// The archive is written little-endian; this implementation targets
// little-endian hosts and fails fast elsewhere.
void require_little_endian() {
  const uint32_t probe = 1;
  uint8_t first;
  std::memcpy(&first, &probe, 1);
  if (first != 1) throw IoError("checkpoint format requires a little-endian host");
}

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw BadCheckpointError("truncated checkpoint");
  return value;
}

void write_tensor(std::ostream& out, const std::string& name, const TensorF& tensor) {
  write_pod(out, static_cast<uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_pod(out, static_cast<uint8_t>(0));  // dtype 0 = float32
  write_pod(out, static_cast<uint8_t>(tensor.ndim()));
  for (int d : tensor.shape) write_pod(out, static_cast<int32_t>(d));
  out.write(reinterpret_cast<const char*>(tensor.ptr()),
            static_cast<std::streamsize>(tensor.size() * sizeof(float)));
}

std::pair<std::string, TensorF> read_tensor(std::istream& in) {
  const uint32_t name_len = read_pod<uint32_t>(in);
  if (name_len > 4096) throw BadCheckpointError("implausible tensor name length");
  std::string name(name_len, '\0');
  in.read(name.data(), name_len);
  const uint8_t dtype = read_pod<uint8_t>(in);
  if (dtype != 0) throw BadCheckpointError("unsupported tensor dtype");
  const uint8_t ndim = read_pod<uint8_t>(in);
  std::vector<int> shape(ndim);
  for (auto& d : shape) d = read_pod<int32_t>(in);
  TensorF tensor(shape);
  in.read(reinterpret_cast<char*>(tensor.ptr()),
          static_cast<std::streamsize>(tensor.size() * sizeof(float)));
  if (!in) throw BadCheckpointError("truncated tensor payload");
  return {std::move(name), std::move(tensor)};
}

ordered_json gen_spec_to_json(const GeneratorSpec& s) {
  ordered_json j;
  j["in_channels"] = s.in_channels;
  j["out_channels"] = s.out_channels;
  j["encoder_widths"] = s.encoder_widths;
  j["decoder_widths"] = s.decoder_widths;
  j["dropout_p"] = s.dropout_p;
  j["dropout_stages"] = s.dropout_stages;
  j["input_size"] = s.input_size;
  return j;
}

GeneratorSpec gen_spec_from_json(const ordered_json& j) {
  GeneratorSpec s;
  s.in_channels = j.at("in_channels").get<int>();
  s.out_channels = j.at("out_channels").get<int>();
  s.encoder_widths = j.at("encoder_widths").get<std::vector<int>>();
  s.decoder_widths = j.at("decoder_widths").get<std::vector<int>>();
  s.dropout_p = j.at("dropout_p").get<double>();
  s.dropout_stages = j.at("dropout_stages").get<int>();
  s.input_size = j.at("input_size").get<int>();
  return s;
}

ordered_json disc_spec_to_json(const DiscriminatorSpec& s) {
  ordered_json j;
  j["image_channels"] = s.image_channels;
  j["mask_channels"] = s.mask_channels;
  j["kernel"] = s.kernel;
  j["pad"] = s.pad;
  j["widths"] = s.widths;
  j["strides"] = s.strides;
  j["input_size"] = s.input_size;
  return j;
}

DiscriminatorSpec disc_spec_from_json(const ordered_json& j) {
  DiscriminatorSpec s;
  s.image_channels = j.at("image_channels").get<int>();
  s.mask_channels = j.at("mask_channels").get<int>();
  s.kernel = j.at("kernel").get<int>();
  s.pad = j.at("pad").get<int>();
  s.widths = j.at("widths").get<std::vector<int>>();
  s.strides = j.at("strides").get<std::vector<int>>();
  s.input_size = j.at("input_size").get<int>();
  return s;
}

void check_key_set(const ModelParamsF& params, const ParamShapes& expected,
                   const std::string& what) {
  if (params.count() != expected.size())
    throw BadCheckpointError(what + " parameter count does not match its spec");
  for (size_t i = 0; i < expected.size(); ++i) {
    if (params.items[i].first != expected[i].first ||
        params.items[i].second.shape != expected[i].second)
      throw BadCheckpointError(what + " parameter " + expected[i].first +
                               " missing or misshapen");
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  require_little_endian();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);

  ordered_json meta;
  meta["epoch"] = ckpt.epoch;
  meta["recon_mode"] = to_string(ckpt.recon_mode);
  meta["config_hash"] = ckpt.config_hash;
  meta["val_metric"] = ckpt.val_metric;
  meta["has_val_metric"] = ckpt.has_val_metric;
  meta["has_optimizer"] = ckpt.has_optimizer;
  meta["adam_gen_t"] = ckpt.adam_gen.t;
  meta["adam_disc_t"] = ckpt.adam_disc.t;
  meta["generator"] = gen_spec_to_json(ckpt.gen_spec);
  meta["discriminator"] = disc_spec_to_json(ckpt.disc_spec);
  const std::string json = meta.dump();

  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<uint64_t>(json.size()));
  out.write(json.data(), static_cast<std::streamsize>(json.size()));

  uint32_t tensor_count =
      static_cast<uint32_t>(ckpt.gen.count() + ckpt.disc.count());
  if (ckpt.has_optimizer)
    tensor_count += static_cast<uint32_t>(2 * ckpt.gen.count() + 2 * ckpt.disc.count());
  write_pod(out, tensor_count);

  for (const auto& [name, tensor] : ckpt.gen.items) write_tensor(out, "gen." + name, tensor);
  for (const auto& [name, tensor] : ckpt.disc.items) write_tensor(out, "disc." + name, tensor);
  if (ckpt.has_optimizer) {
    for (const auto& [name, tensor] : ckpt.adam_gen.m.items)
      write_tensor(out, "adam_gen.m." + name, tensor);
    for (const auto& [name, tensor] : ckpt.adam_gen.v.items)
      write_tensor(out, "adam_gen.v." + name, tensor);
    for (const auto& [name, tensor] : ckpt.adam_disc.m.items)
      write_tensor(out, "adam_disc.m." + name, tensor);
    for (const auto& [name, tensor] : ckpt.adam_disc.v.items)
      write_tensor(out, "adam_disc.v." + name, tensor);
  }
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  require_little_endian();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open checkpoint: " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw BadCheckpointError("not a splicegan checkpoint: " + path);
  const uint32_t version = read_pod<uint32_t>(in);
  if (version != kVersion)
    throw BadCheckpointError("unsupported checkpoint version " + std::to_string(version));

  const uint64_t json_size = read_pod<uint64_t>(in);
  std::string json(json_size, '\0');
  in.read(json.data(), static_cast<std::streamsize>(json_size));
  if (!in) throw BadCheckpointError("truncated checkpoint header");
  ordered_json meta;
  try {
    meta = ordered_json::parse(json);
  } catch (const std::exception& e) {
    throw BadCheckpointError(std::string("invalid checkpoint metadata: ") + e.what());
  }

  Checkpoint ckpt;
  ckpt.epoch = meta.at("epoch").get<int>();
  ckpt.recon_mode = recon_mode_from_string(meta.at("recon_mode").get<std::string>());
  ckpt.config_hash = meta.at("config_hash").get<uint64_t>();
  ckpt.val_metric = meta.at("val_metric").get<double>();
  ckpt.has_val_metric = meta.at("has_val_metric").get<bool>();
  ckpt.has_optimizer = meta.at("has_optimizer").get<bool>();
  ckpt.adam_gen.t = meta.at("adam_gen_t").get<int64_t>();
  ckpt.adam_disc.t = meta.at("adam_disc_t").get<int64_t>();
  ckpt.gen_spec = gen_spec_from_json(meta.at("generator"));
  ckpt.disc_spec = disc_spec_from_json(meta.at("discriminator"));

  const uint32_t tensor_count = read_pod<uint32_t>(in);
  for (uint32_t i = 0; i < tensor_count; ++i) {
    auto [name, tensor] = read_tensor(in);
    if (name.starts_with("gen.")) {
      ckpt.gen.add(name.substr(4), std::move(tensor));
    } else if (name.starts_with("disc.")) {
      ckpt.disc.add(name.substr(5), std::move(tensor));
    } else if (name.starts_with("adam_gen.m.")) {
      ckpt.adam_gen.m.add(name.substr(11), std::move(tensor));
    } else if (name.starts_with("adam_gen.v.")) {
      ckpt.adam_gen.v.add(name.substr(11), std::move(tensor));
    } else if (name.starts_with("adam_disc.m.")) {
      ckpt.adam_disc.m.add(name.substr(12), std::move(tensor));
    } else if (name.starts_with("adam_disc.v.")) {
      ckpt.adam_disc.v.add(name.substr(12), std::move(tensor));
    } else {
      throw BadCheckpointError("unexpected tensor in checkpoint: " + name);
    }
  }

  check_key_set(ckpt.gen, generator_param_shapes(ckpt.gen_spec), "generator");
  check_key_set(ckpt.disc, discriminator_param_shapes(ckpt.disc_spec), "discriminator");
  for (const auto& [name, tensor] : ckpt.gen.items)
    if (!all_finite(tensor)) throw BadCheckpointError("non-finite generator parameter " + name);
  for (const auto& [name, tensor] : ckpt.disc.items)
    if (!all_finite(tensor))
      throw BadCheckpointError("non-finite discriminator parameter " + name);
  return ckpt;
}

}  // namespace splicegan
