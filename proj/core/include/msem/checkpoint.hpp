#pragma once

#include <string>

#include "json.hpp"
#include "msem/grad_check.hpp"

namespace msem {

// Versioned model snapshot: config JSON (encoder config, vocabularies,
// head configuration, training step), plus every named tensor. Optimizer
// moments are stored in the tensor table under the "adam.m."/"adam.v."
// prefixes so an interrupted run resumes cleanly.
struct Checkpoint {
  static constexpr uint32_t kVersion = 1;

  nlohmann::json config;
  ParamStore tensors;

  int64_t step() const { return config.value("step", int64_t{0}); }
};

// Tensor payloads are f32 on disk; in-memory doubles are kept snapped to
// f32 values so save/load round trips are bit-exact.
void checkpoint_save(const Checkpoint& ckpt, const std::string& path);
Checkpoint checkpoint_load(const std::string& path);

std::string sha256_file(const std::string& path);

}  // namespace msem
