#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsstdef/baseline.hpp"
#include "fsstdef/components.hpp"
#include "fsstdef/def.hpp"
#include "fsstdef/detrend.hpp"
#include "fsstdef/error.hpp"
#include "fsstdef/pmu_data.hpp"
#include "fsstdef/ridge.hpp"
#include "fsstdef/synth.hpp"
#include "fsstdef/tfa.hpp"

namespace fsstdef {

enum class Pipeline { fsst, fixed_band, windowed_band };
enum class TfExport { none, ridge_channel, all };

struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  CsvSchema schema;
  double outlier_k = 5.0;
  DetrendSettings detrend;
  /// Fixed window width; when unset the width is picked from sigma_grid.
  std::optional<double> sigma;
  std::vector<double> sigma_grid = default_sigma_grid();
  TfParams tf{.n_freq = 0, .hop = 1, .gamma_rel = 1e-4, .trunc_mult = 5.0, .max_freq_hz = 5.0};
  RidgeParams ridge;
  Channel ridge_channel = Channel::p;
  double d_hz = 0.0;
  OnsetParams onset;
  FitSpan fit;
  Pipeline pipeline = Pipeline::fsst;
  /// Empty = pick centres from the DFT peaks of the ridge channel.
  std::vector<BandSpec> bands;
  double auto_band_e = 0.05;
  WindowedParams windowed;
  std::uint64_t seed = 0;
  TfExport tf_export = TfExport::ridge_channel;
};

/// Overlays the keys present in `j` on `base`. Unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
nlohmann::json to_json(const RunConfig& cfg);

/// Throws a parameter error for any out-of-contract value.
void validate(const RunConfig& cfg);

/// Stage failure carrying where it happened and what to try.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string branch, const Error& cause, std::string hint);
  const std::string& stage() const noexcept { return stage_; }
  const std::string& branch() const noexcept { return branch_; }
  const std::string& hint() const noexcept { return hint_; }

 private:
  std::string stage_;
  std::string branch_;
  std::string hint_;
};

inline constexpr int exit_source_found = 0;
inline constexpr int exit_error = 1;
inline constexpr int exit_no_source = 2;

struct RunResult {
  nlohmann::json report;
  int exit_code = exit_no_source;
};

RunResult run_analyze(const RunConfig& cfg);
RunResult run_compare(const RunConfig& cfg);

struct SynthConfig {
  std::filesystem::path out_dir;
  ScenarioOptions scenario;
};

SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig base = {});

/// Writes measurements.csv and ground_truth.json.
GroundTruth run_synth(const SynthConfig& cfg);

std::string sha256_hex(const std::filesystem::path& file);
std::string version() noexcept;

}  // namespace fsstdef
