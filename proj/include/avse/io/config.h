// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Sectioned key=value configuration with [model], [train] and [data]
// sections. Missing keys keep their defaults; unknown keys are rejected.

#pragma once

#include <filesystem>
#include <string>

#include "avse/dataset.h"
#include "avse/extractor.h"
#include "avse/trainer.h"

namespace avse::io {

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
  // Data sizes for in-process runs and the held-out split of manifests.
  std::size_t train_count = 450;
  std::size_t val_count = 50;
  std::size_t test_count = 100;
};

RunConfig parse_config(const std::string &text);
std::string format_config(const RunConfig &config);

RunConfig load_config(const std::filesystem::path &path);
void save_config(const std::filesystem::path &path, const RunConfig &config);

}  // namespace avse::io
