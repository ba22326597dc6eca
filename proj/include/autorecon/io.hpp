#pragma once

#include "autorecon/reconstruct.hpp"
#include "autorecon/training.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace autorecon {

inline constexpr int kModelFormatVersion = 1;

/// Dataset CSV: header `time_s,<feature>...`, one row per sample, values
/// printed with 17 significant digits so text round trips are exact.
std::string dataset_to_csv(const TimeSeriesSet& data);
void write_dataset_csv(const std::filesystem::path& path, const TimeSeriesSet& data);

/// Parses a dataset CSV. The time column must be strictly increasing and
/// equidistant within 1e-9 relative; dt is taken from the first and last
/// stamps.
TimeSeriesSet parse_dataset_csv(const std::string& text, const std::string& origin = "<memory>");
TimeSeriesSet read_dataset_csv(const std::filesystem::path& path);

/// Model JSON: format tag and version, network configuration, features,
/// scaler, every parameter tensor as {name, shape, values} and training
/// metadata. Doubles are written in shortest round-trip form.
std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);
void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

/// `epoch,dataset,loss`
std::string loss_history_to_csv(const std::vector<LossRecord>& history);

/// `time_s,<f>_xmiss,<f>_xhatmiss...` in missing-feature order.
std::string reconstruction_to_csv(const ReconstructionResult& result);

/// `epoch,reduced_loss`
std::string reconstruction_history_to_csv(const ReconstructionResult& result);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// %.17g formatting.
std::string format_double(double v);

}  // namespace autorecon
