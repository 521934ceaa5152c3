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

#pragma once

#include <memory>
#include <string>

#include "core/corpus.hpp"
#include "core/detector.hpp"
#include "core/generator.hpp"
#include "core/losses.hpp"
#include "core/message.hpp"

namespace fakemark {

struct ModelConfig {
  char variant = 'A';  // 'A' waveform, 'T' spectrogram
  double desk_scale = 1.0;
  FrontEndSpec frontend;
  GeneratorConfigA gen_a;
  GeneratorConfigT gen_t;
  DiscriminatorConfig disc;
  uint64_t seed = 1;

  int latent_dim() const {
    return variant == 'A' ? gen_a.scaled_latent() : gen_t.latent_dim();
  }
  void apply_desk_scale();  // propagates desk_scale into the submodule configs
};

// The full trainable bundle: message table, one generator variant, detector
// and the adversarial discriminators, plus the registry it was built for.
class Model {
 public:
  Model(const ModelConfig& cfg, const SystemRegistry& registry);

  GeneratorOutput generate(Tape& t, const std::vector<double>& samples, int w);

  struct EmbedResult {
    AudioClip watermarked;
    AudioClip delta;
  };
  EmbedResult embed_clip(const AudioClip& clip, int w);

  ClassProbabilities detect(const AudioClip& clip);
  Var detector_logits_wave(Tape& t, Var x);  // x [T], builtin front-end

  std::vector<Param*> trainable_params();  // generator + message + detector
  std::vector<Param*> discriminator_params();
  std::vector<Param*> all_params();

  const ModelConfig& config() const { return cfg_; }
  const SystemRegistry& registry() const { return registry_; }
  int num_classes() const { return registry_.num_classes; }
  int64_t min_generator_samples() const;

  EmbeddingTable& embedding() { return embedding_; }
  Detector& detector() { return detector_; }
  DiscriminatorBundle& discriminators() { return disc_; }
  GeneratorA* generator_a() { return gen_a_.get(); }
  GeneratorT* generator_t() { return gen_t_.get(); }

 private:
  ModelConfig cfg_;
  SystemRegistry registry_;
  EmbeddingTable embedding_;
  std::unique_ptr<GeneratorA> gen_a_;
  std::unique_ptr<GeneratorT> gen_t_;
  Detector detector_;
  DiscriminatorBundle disc_;
};

// ---- checkpoint -----------------------------------------------------------------

constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  int64_t step = 0;
  double best_score = 0;
  std::string config_snapshot;  // free-form (training config JSON)
};

// Binary format: magic, version, JSON header (model config, registry, meta,
// tensor manifest), raw little-endian doubles, CRC32. Round-trips reproduce
// forward passes bit for bit.
void save_checkpoint(const std::string& path, Model& model, const CheckpointMeta& meta);
std::unique_ptr<Model> load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

// JSON (de)serialization used by the checkpoint and the CLI.
std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& json);
std::string registry_to_json(const SystemRegistry& reg);
SystemRegistry registry_from_json(const std::string& json);

}  // namespace fakemark
