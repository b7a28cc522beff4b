#pragma once

#include <string>

#include "mtl/net.hpp"

namespace mtl {

struct SavedModel {
  NetConfig net_cfg;
  ModelParams params;
};

// Text layout, one "mtl-model v1" version header line, then the net config,
// then each tensor as "param <name> <rows> <cols>" followed by its rows with
// 17 significant digits (exact double round-trip).

void save_model(const std::string& path, const NetConfig& cfg, const ModelParams& params);

SavedModel load_model(const std::string& path);

}  // namespace mtl
