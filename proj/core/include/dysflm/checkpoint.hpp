#pragma once

#include <string>

#include "dysflm/fusion.hpp"

namespace dysflm {

// Single-file checkpoint: magic, format version, LM config, vocabulary,
// then named float32 parameter arrays with explicit shapes. Base
// weights live under "base/", adapters under "lora/" and the projector
// under "proj/", so base-only and base+adapter loads are both possible.
void save_checkpoint(const FusedModel<float>& model, const std::string& path);

FusedModel<float> load_checkpoint(const std::string& path,
                                  bool include_adapters = true);

}  // namespace dysflm
