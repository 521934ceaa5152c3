// Copyright 2026 The FakeMark Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "core/model.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fakemark {

using nlohmann::json;

void ModelConfig::apply_desk_scale() {
  gen_a.desk_scale = desk_scale;
  gen_t.desk_scale = desk_scale;
  disc.desk_scale = desk_scale;
  frontend.desk_scale = desk_scale;
}

Model::Model(const ModelConfig& cfg, const SystemRegistry& registry)
    : cfg_(cfg),
      registry_(registry),
      embedding_([&] {
        Rng rng(cfg.seed);
        Rng er = rng.derive("embedding");
        return EmbeddingTable(registry.num_classes, cfg_.latent_dim(), er);
      }()),
      detector_([&] {
        Rng rng(cfg.seed);
        return Detector(cfg.frontend, registry.num_classes, rng);
      }()),
      disc_([&] {
        Rng rng(cfg.seed);
        return DiscriminatorBundle(cfg.disc, rng);
      }()) {
  Rng rng(cfg.seed);
  if (cfg_.variant == 'A')
    gen_a_ = std::make_unique<GeneratorA>(cfg_.gen_a, rng);
  else if (cfg_.variant == 'T')
    gen_t_ = std::make_unique<GeneratorT>(cfg_.gen_t, rng);
  else
    throw std::invalid_argument("model: variant must be 'A' or 'T'");
}

GeneratorOutput Model::generate(Tape& t, const std::vector<double>& samples, int w) {
  Var table = leaf(t, embedding_.table);
  Var e_w = embed(t, WatermarkMessage{w}, table);
  return gen_a_ ? gen_a_->generate(t, samples, e_w) : gen_t_->generate(t, samples, e_w);
}

int64_t Model::min_generator_samples() const {
  return gen_a_ ? cfg_.gen_a.alpha() : cfg_.gen_t.fft_size;
}

Model::EmbedResult Model::embed_clip(const AudioClip& clip, int w) {
  if (w < 0 || w >= num_classes())
    throw std::out_of_range("embed: class " + std::to_string(w) + " out of range (C=" +
                            std::to_string(num_classes()) + ")");
  Tape t;
  GeneratorOutput out = generate(t, clip.samples, w);
  EmbedResult res;
  res.watermarked = clip;
  res.watermarked.samples = out.watermarked->val.vec();
  res.delta = clip;
  res.delta.samples = out.delta->val.vec();
  res.delta.id = clip.id + ".delta";
  return res;
}

ClassProbabilities Model::detect(const AudioClip& clip) { return detector_.classify(clip); }

Var Model::detector_logits_wave(Tape& t, Var x) {
  Var h = reshape(t, x, {1, x->val.numel()});
  return detector_.logits_from_features(t, detector_.features_var(t, h));
}

std::vector<Param*> Model::trainable_params() {
  std::vector<Param*> out{&embedding_.table};
  auto gp = gen_a_ ? gen_a_->params() : gen_t_->params();
  out.insert(out.end(), gp.begin(), gp.end());
  auto dp = detector_.params();
  out.insert(out.end(), dp.begin(), dp.end());
  return out;
}

std::vector<Param*> Model::discriminator_params() { return disc_.params(); }

std::vector<Param*> Model::all_params() {
  auto out = trainable_params();
  auto dp = disc_.params();
  out.insert(out.end(), dp.begin(), dp.end());
  return out;
}

// ---- JSON ---------------------------------------------------------------------------

std::string model_config_to_json(const ModelConfig& cfg) {
  json j;
  j["variant"] = std::string(1, cfg.variant);
  j["desk_scale"] = cfg.desk_scale;
  j["seed"] = cfg.seed;
  j["frontend"] = {{"kind", cfg.frontend.kind == FrontEndSpec::Kind::builtin_conv
                                ? "builtin"
                                : "external"},
                   {"feature_dim", cfg.frontend.feature_dim},
                   {"adapter_command", cfg.frontend.adapter_command}};
  j["gen_a"] = {{"base_channels", cfg.gen_a.base_channels},
                {"kernel", cfg.gen_a.kernel},
                {"strides", cfg.gen_a.strides},
                {"latent_dim", cfg.gen_a.latent_dim},
                {"recurrent_layers", cfg.gen_a.recurrent_layers}};
  j["gen_t"] = {{"fft_size", cfg.gen_t.fft_size},
                {"hop", cfg.gen_t.hop},
                {"carrier_layers", cfg.gen_t.carrier_layers},
                {"embedder_layers", cfg.gen_t.embedder_layers},
                {"hidden", cfg.gen_t.hidden}};
  j["disc"] = {{"scales", cfg.disc.scales}, {"base_channels", cfg.disc.base_channels}};
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  json j = json::parse(text);
  ModelConfig cfg;
  cfg.variant = j.at("variant").get<std::string>().at(0);
  cfg.desk_scale = j.at("desk_scale").get<double>();
  cfg.seed = j.at("seed").get<uint64_t>();
  const auto& fe = j.at("frontend");
  cfg.frontend.kind = fe.at("kind").get<std::string>() == "builtin"
                          ? FrontEndSpec::Kind::builtin_conv
                          : FrontEndSpec::Kind::external_ssl_adapter;
  cfg.frontend.feature_dim = fe.at("feature_dim").get<int>();
  cfg.frontend.adapter_command = fe.at("adapter_command").get<std::string>();
  const auto& ga = j.at("gen_a");
  cfg.gen_a.base_channels = ga.at("base_channels").get<int>();
  cfg.gen_a.kernel = ga.at("kernel").get<int>();
  cfg.gen_a.strides = ga.at("strides").get<std::vector<int>>();
  cfg.gen_a.latent_dim = ga.at("latent_dim").get<int>();
  cfg.gen_a.recurrent_layers = ga.at("recurrent_layers").get<int>();
  const auto& gt = j.at("gen_t");
  cfg.gen_t.fft_size = gt.at("fft_size").get<int>();
  cfg.gen_t.hop = gt.at("hop").get<int>();
  cfg.gen_t.carrier_layers = gt.at("carrier_layers").get<int>();
  cfg.gen_t.embedder_layers = gt.at("embedder_layers").get<int>();
  cfg.gen_t.hidden = gt.at("hidden").get<int>();
  cfg.disc.scales = j.at("disc").at("scales").get<int>();
  cfg.disc.base_channels = j.at("disc").at("base_channels").get<int>();
  cfg.apply_desk_scale();
  return cfg;
}

std::string registry_to_json(const SystemRegistry& reg) {
  json j;
  j["num_classes"] = reg.num_classes;
  j["bits_len"] = reg.bits_len;
  if (reg.bits_seed) j["bits_seed"] = *reg.bits_seed;
  json entries = json::array();
  for (const auto& e : reg.entries)
    entries.push_back({{"system_name", e.system_name}, {"class_id", e.class_id}, {"bits", e.bits}});
  j["entries"] = std::move(entries);
  return j.dump();
}

SystemRegistry registry_from_json(const std::string& text) {
  json j = json::parse(text);
  SystemRegistry reg;
  reg.num_classes = j.at("num_classes").get<int>();
  reg.bits_len = j.at("bits_len").get<int>();
  if (j.contains("bits_seed")) reg.bits_seed = j.at("bits_seed").get<uint64_t>();
  for (const auto& e : j.at("entries"))
    reg.entries.push_back({e.at("system_name").get<std::string>(), e.at("class_id").get<int>(),
                           e.at("bits").get<std::vector<int>>()});
  return reg;
}

// ---- checkpoint -----------------------------------------------------------------------

namespace {
constexpr char kMagic[4] = {'F', 'M', 'C', 'K'};

void append_u32(std::vector<uint8_t>& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
uint32_t read_u32(const uint8_t* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
  return v;
}
}  // namespace

void save_checkpoint(const std::string& path, Model& model, const CheckpointMeta& meta) {
  auto params = model.all_params();
  json header;
  header["model_config"] = json::parse(model_config_to_json(model.config()));
  header["registry"] = json::parse(registry_to_json(model.registry()));
  header["step"] = meta.step;
  header["best_score"] = meta.best_score;
  header["config_snapshot"] = meta.config_snapshot;
  json tensors = json::array();
  size_t total = 0;
  for (Param* p : params) {
    tensors.push_back({{"name", p->name}, {"dims", p->w.dims()}});
    total += static_cast<size_t>(p->w.numel());
  }
  header["tensors"] = std::move(tensors);
  const std::string htext = header.dump();

  std::vector<uint8_t> blob;
  blob.reserve(total * 8);
  for (Param* p : params) {
    const auto& v = p->w.vec();
    const uint8_t* raw = reinterpret_cast<const uint8_t*>(v.data());
    blob.insert(blob.end(), raw, raw + v.size() * 8);
  }
  uint32_t crc = static_cast<uint32_t>(crc32(0L, Z_NULL, 0));
  crc = static_cast<uint32_t>(
      crc32(crc, reinterpret_cast<const Bytef*>(htext.data()), static_cast<uInt>(htext.size())));
  crc = static_cast<uint32_t>(crc32(crc, blob.data(), static_cast<uInt>(blob.size())));

  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  append_u32(out, kCheckpointVersion);
  append_u32(out, static_cast<uint32_t>(htext.size()));
  out.insert(out.end(), htext.begin(), htext.end());
  out.insert(out.end(), blob.begin(), blob.end());
  append_u32(out, crc);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot write " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("checkpoint: short write to " + path);
}

std::unique_ptr<Model> load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const uint32_t version = read_u32(bytes.data() + 4);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: format version " + std::to_string(version) +
                             " unsupported (expected " + std::to_string(kCheckpointVersion) + ")");
  const uint32_t hlen = read_u32(bytes.data() + 8);
  if (bytes.size() < 12 + hlen + 4) throw std::runtime_error("checkpoint: truncated " + path);
  const std::string htext(reinterpret_cast<const char*>(bytes.data() + 12), hlen);
  const uint8_t* blob = bytes.data() + 12 + hlen;
  const size_t blob_len = bytes.size() - 12 - hlen - 4;
  const uint32_t stored_crc = read_u32(bytes.data() + bytes.size() - 4);
  uint32_t crc = static_cast<uint32_t>(crc32(0L, Z_NULL, 0));
  crc = static_cast<uint32_t>(
      crc32(crc, reinterpret_cast<const Bytef*>(htext.data()), static_cast<uInt>(htext.size())));
  crc = static_cast<uint32_t>(crc32(crc, blob, static_cast<uInt>(blob_len)));
  if (crc != stored_crc) throw std::runtime_error("checkpoint: CRC mismatch (corrupted file)");

  json header = json::parse(htext);
  ModelConfig cfg = model_config_from_json(header.at("model_config").dump());
  SystemRegistry reg = registry_from_json(header.at("registry").dump());
  auto model = std::make_unique<Model>(cfg, reg);
  if (meta) {
    meta->step = header.at("step").get<int64_t>();
    meta->best_score = header.at("best_score").get<double>();
    meta->config_snapshot = header.at("config_snapshot").get<std::string>();
  }

  auto params = model->all_params();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != params.size())
    throw std::runtime_error("checkpoint: tensor count mismatch");
  size_t off = 0;
  for (size_t i = 0; i < params.size(); ++i) {
    const auto dims = tensors[i].at("dims").get<std::vector<int64_t>>();
    const std::string name = tensors[i].at("name").get<std::string>();
    if (dims != params[i]->w.dims() || name != params[i]->name)
      throw std::runtime_error("checkpoint: tensor layout mismatch at " + name);
    const size_t n = static_cast<size_t>(params[i]->w.numel()) * 8;
    if (off + n > blob_len) throw std::runtime_error("checkpoint: blob too short");
    std::memcpy(params[i]->w.data(), blob + off, n);
    off += n;
  }
  if (off != blob_len) throw std::runtime_error("checkpoint: trailing blob bytes");
  return model;
}

}  // namespace fakemark
