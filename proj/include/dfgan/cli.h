#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfgan/config.h"
#include "dfgan/metrics.h"

namespace dfgan {

inline constexpr const char* kCodeVersion = "dfgan 1.0.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitNumeric = 2,
  kExitVerification = 3,
};

/// Output layout of one training run.
struct RunPaths {
  std::filesystem::path dir;

  std::filesystem::path manifest() const { return dir / "manifest.json"; }
  std::filesystem::path config() const { return dir / "config.json"; }
  std::filesystem::path metrics() const { return dir / "metrics.csv"; }
  std::filesystem::path samples() const { return dir / "samples.csv"; }
  std::filesystem::path final_checkpoint() const { return dir / "final.ckpt"; }
  std::filesystem::path checkpoint_dir() const { return dir / "checkpoints"; }
  std::filesystem::path checkpoint(std::size_t iter) const;
};

/// Trains per cfg into out_dir: manifest (written first), normalized config,
/// metrics CSV, periodic and final checkpoints, and a generated sample dump.
/// With a resume checkpoint, training continues from its iteration and the
/// metrics CSV is appended to.
/// Progress lines go to `log` when given.
std::vector<MetricsRecord> run_experiment(const RunConfig& cfg, const std::filesystem::path& out_dir,
                                          const std::optional<std::filesystem::path>& resume = {},
                                          std::ostream* log = nullptr);

/// Reads the config snapshot recorded in a run directory's manifest.
RunConfig config_from_manifest(const std::filesystem::path& run_dir);

/// Sweep description: {"base": <config document>, "axes": {"train.lr": [..], ...}}.
struct SweepSpec {
  nlohmann::ordered_json base = nlohmann::ordered_json::object();
  std::vector<std::pair<std::string, std::vector<nlohmann::ordered_json>>> axes;
};

SweepSpec parse_sweep(const std::string& document);

struct SweepCell {
  std::size_t index = 0;
  std::vector<nlohmann::ordered_json> values;  // one per axis
  std::filesystem::path dir;
  std::optional<MetricsRecord> terminal;
  std::string error;  // empty on success
  int status = kExitOk;
};

/// Runs the Cartesian product of the axes (row-major in axis order) with up
/// to `jobs` cells in parallel, one directory per cell, then writes
/// summary.csv with each cell's terminal record.
std::vector<SweepCell> run_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir,
                                 std::size_t jobs);

/// Entry point of the command-line tool. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dfgan
