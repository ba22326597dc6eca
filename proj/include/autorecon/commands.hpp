#pragma once

// Library side of the command-line tool. Each command reads and writes the
// documented file formats and returns what it produced, so tests can drive
// the same code paths as the executable.

#include "autorecon/circuit.hpp"
#include "autorecon/eval.hpp"
#include "autorecon/gradcheck.hpp"
#include "autorecon/reconstruct.hpp"
#include "autorecon/training.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace autorecon {

struct ReconstructionDefaults {
    double learning_rate = 0.005;
    int epochs_single = 300;
    int epochs_multi = 3000;
    InitMode init = InitMode::Zeros;
};

/// Everything a run needs; read from one JSON file (comments allowed).
struct PipelineConfig {
    SuiteConfig simulation;
    TrainConfig training;
    ReconstructionDefaults reconstruction;
};

/// Keeps freed tape buffers in the process heap instead of returning them to
/// the system after every epoch (glibc only, no-op elsewhere).
void retain_freed_memory();

PipelineConfig parse_pipeline_config(const std::string& text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct SimulateReport {
    std::vector<std::filesystem::path> files;
    std::filesystem::path manifest;
    std::vector<std::string> warnings;
};

/// Writes train_*.csv, test_*.csv and manifest.json into `out_dir`. The
/// manifest records the seed, grid, circuit values and every waveform.
SimulateReport cmd_simulate(const SuiteConfig& config, const std::filesystem::path& out_dir);

/// Training sets of a data directory: the files listed as training in
/// manifest.json, or else every train_*.csv in name order.
std::vector<TimeSeriesSet> load_training_sets(const std::filesystem::path& data_dir);

/// Trains on `data_dir`, writes the model JSON and the loss history CSV.
TrainResult cmd_train(const std::filesystem::path& data_dir, const TrainConfig& config,
                      const std::filesystem::path& model_path, const std::filesystem::path& history_path,
                      const TrainProgress& progress = {});

/// Parses "u2,i1" into names, rejecting empty entries.
std::vector<std::string> parse_feature_list(const std::string& text);

/// Parses "i2=2,u1=0.5" into per-feature weights.
std::map<std::string, double> parse_weights(const std::string& text);

/// Runs reconstruction and writes `out_path` (time_s, <f>_xmiss,
/// <f>_xhatmiss, ...) plus the reduced-loss history when a path is given.
ReconstructionResult cmd_reconstruct(const std::filesystem::path& model_path,
                                     const std::filesystem::path& dataset_path, const ReconstructionSpec& spec,
                                     const std::filesystem::path& out_path,
                                     const std::optional<std::filesystem::path>& history_path = std::nullopt);

struct EvaluateReport {
    /// One entry per compared result column.
    std::vector<FeatureReport> features;
    std::filesystem::path report_csv;
    std::vector<std::filesystem::path> spectra;
};

/// Compares every result column with the truth column it estimates:
/// `<f>_xmiss` and `<f>_xhatmiss` against `<f>`, a plain `<f>` against `<f>`.
/// Writes report.csv and one spectrum_<column>.csv per compared column and
/// per referenced truth feature.
EvaluateReport cmd_evaluate(const std::filesystem::path& result_path, const std::filesystem::path& truth_path,
                            const std::filesystem::path& out_dir);

std::string spectrum_to_csv(const Spectrum& spectrum);

}  // namespace autorecon
