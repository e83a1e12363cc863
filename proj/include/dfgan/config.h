#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "dfgan/networks.h"
#include "dfgan/synthdata.h"
#include "dfgan/train.h"

namespace dfgan {

/// Everything a run needs. Defaults follow the canonical 2-D benchmark.
struct RunConfig {
  MixtureSpec dataset;
  NetConfig model;
  TrainConfig train;
  EvalConfig metrics;
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Strict JSON parse: unknown keys and wrong types are rejected, and every
/// omitted field takes its default. model.data_dim follows the dataset kind.
/// Parse errors carry line and column.
RunConfig parse_config(std::string_view document);
RunConfig load_config(const std::filesystem::path& path);

/// Applies a DFGAN_SEED value (decimal integer) to the run seed.
void apply_seed_override(RunConfig& cfg, const char* value);

/// Full config with every field materialized.
nlohmann::ordered_json config_to_json(const RunConfig& cfg);
/// Pretty-printed config_to_json; parse_config of the result reproduces cfg.
std::string normalized_config(const RunConfig& cfg);

/// Training set plus a held-out set drawn from the same mixture with an
/// independent seed.
TrainData make_train_data(const RunConfig& cfg);

}  // namespace dfgan
