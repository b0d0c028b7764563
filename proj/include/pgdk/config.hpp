#pragma once

#include <string>
#include <vector>

#include "pgdk/trainer.hpp"

namespace pgdk {

// Plain key=value config, one pair per line, '#' comments. Environment
// physics overrides use the "env.<key>" prefix. Overrides apply last.
TrainConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {});

// Applies a single "key=value" string to a config.
void apply_override(TrainConfig& config, const std::string& pair);

// Resolved config in the same key=value syntax, sufficient to reproduce the
// run exactly.
void write_manifest(const TrainConfig& config, const std::string& path);

}  // namespace pgdk
