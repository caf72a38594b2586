#pragma once

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "theta/metrics/confusion.hpp"
#include "theta/net/train.hpp"
#include "theta/pipeline/config.hpp"
#include "theta/pipeline/teleop.hpp"
#include "theta/synthview/dataset.hpp"
#include "theta/wire/fuzz.hpp"

namespace theta::pipeline {

/// Process exit codes. ConfigError, ArgumentError and the data/label/shape
/// family map to 2, IoError and FormatError to 3, Stream/SyncError to 4.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitIo = 3, kExitStream = 4 };
int exit_code_for(const std::exception& e);

/// count overrides frames_per_gesture_per_view; 0 or negative is a ConfigError.
synthview::DatasetManifest cmd_gen(const PipelineConfig& config, const std::filesystem::path& out_dir,
                                   std::optional<int> count = std::nullopt);

struct TrainReport {
  std::vector<net::EpochStats> history;
  int best_epoch = -1;
  double best_val_acc = 0.0;
  std::size_t train_samples = 0;
  std::size_t val_samples = 0;
};

/// Trains on the triplets under data_dir and writes the best checkpoint.
/// One JSON object per epoch goes to `epoch_lines` as it completes.
TrainReport cmd_train(const PipelineConfig& config, const std::filesystem::path& data_dir,
                      const std::filesystem::path& checkpoint, std::ostream* epoch_lines = nullptr);

enum class EvalSplit { all, train, val };
EvalSplit parse_eval_split(std::string_view text);

struct EvalReport {
  std::size_t samples = 0;
  metrics::Summary summary;
  std::array<double, kNumJoints> joint_accuracy{};
  metrics::ConfusionSet confusion;
};

/// Metrics of the checkpoint on data_dir. The train/val subsets use the same
/// seeded split as training. An empty selection is a DataError.
EvalReport cmd_eval(const PipelineConfig& config, const std::filesystem::path& checkpoint,
                    const std::filesystem::path& data_dir, EvalSplit split = EvalSplit::all);

/// source: "script" or a dataset directory; sink: "loopback" or a device path.
TeleopReport cmd_teleop(const PipelineConfig& config, const std::filesystem::path& checkpoint,
                        const std::string& source, const std::string& sink, std::ostream* trace = nullptr);

wire::FuzzReport cmd_proto_fuzz(std::uint64_t seed, std::uint64_t frames);

nlohmann::json to_json(const net::EpochStats& e);
nlohmann::json to_json(const TrainReport& r);
nlohmann::json to_json(const synthview::DatasetManifest& m);
nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const LatencyStats& s);
nlohmann::json to_json(const TeleopReport& r);
nlohmann::json to_json(const wire::FuzzReport& r);

}  // namespace theta::pipeline
