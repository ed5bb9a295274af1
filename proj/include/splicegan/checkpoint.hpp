#pragma once

#include <cstdint>
#include <string>

#include "splicegan/losses.hpp"
#include "splicegan/models.hpp"

namespace splicegan {

// Adam first/second moment estimates plus the shared step counter.
struct OptState {
  int64_t t = 0;
  ModelParamsF m;
  ModelParamsF v;

  static OptState zeros_like(const ModelParamsF& params) {
    OptState s;
    s.m = ModelParamsF::zeros_like(params);
    s.v = ModelParamsF::zeros_like(params);
    return s;
  }
};

struct Checkpoint {
  int epoch = 0;
  GeneratorSpec gen_spec;
  DiscriminatorSpec disc_spec;
  ModelParamsF gen;
  ModelParamsF disc;
  ReconMode recon_mode = ReconMode::bce;
  uint64_t config_hash = 0;
  double val_metric = 0.0;
  bool has_val_metric = false;
  bool has_optimizer = false;
  OptState adam_gen;
  OptState adam_disc;
};

// Single-file archive: versioned header, JSON spec descriptors, then named
// float32 tensors in little-endian binary layout.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace splicegan
