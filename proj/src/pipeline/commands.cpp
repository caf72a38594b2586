#include "theta/pipeline/commands.hpp"

#include <numeric>
#include <ostream>
#include <set>

#include "theta/core/error.hpp"
#include "theta/net/checkpoint.hpp"
#include "theta/pipeline/data.hpp"

namespace theta::pipeline {

using nlohmann::json;

namespace {

// Device sinks only accept bytes; the local simulator still needs to see what
// went out, so writes are mirrored into an in-process buffer.
class MirrorLink final : public wire::Link {
 public:
  explicit MirrorLink(std::unique_ptr<wire::Link> device) : device_(std::move(device)) {}
  void write(std::string_view bytes) override {
    device_->write(bytes);
    local_.write(bytes);
  }
  std::vector<std::uint8_t> read_available() override { return local_.read_available(); }
  std::string describe() const override { return device_->describe(); }

 private:
  std::unique_ptr<wire::Link> device_;
  wire::LoopbackLink local_;
};

json joint_array(const std::array<double, kNumJoints>& v) { return json(std::vector<double>(v.begin(), v.end())); }

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const FormatError*>(&e)) return kExitIo;
  if (dynamic_cast<const StreamError*>(&e) || dynamic_cast<const SyncError*>(&e)) return kExitStream;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ArgumentError*>(&e) ||
      dynamic_cast<const ParseError*>(&e) || dynamic_cast<const RangeError*>(&e) ||
      dynamic_cast<const DataError*>(&e) || dynamic_cast<const LabelError*>(&e) ||
      dynamic_cast<const ShapeError*>(&e)) {
    return kExitConfig;
  }
  return kExitFailure;
}

synthview::DatasetManifest cmd_gen(const PipelineConfig& config, const std::filesystem::path& out_dir,
                                   std::optional<int> count) {
  auto options = config.generation();
  if (count) {
    if (*count <= 0) throw ConfigError("frames per gesture must be positive, got " + std::to_string(*count));
    options.frames_per_gesture_per_view = *count;
  }
  const auto table = config.gesture_table();
  return synthview::generate_dataset(table, options, out_dir);
}

TrainReport cmd_train(const PipelineConfig& config, const std::filesystem::path& data_dir,
                      const std::filesystem::path& checkpoint, std::ostream* epoch_lines) {
  const auto data = load_prepared(data_dir, config.hsv, config.network.input_size, config.sync_window_ms);
  const auto split = net::stratified_split(data.tensors.groups(), config.training.val_fraction, config.seed);
  auto result = net::train(data.tensors, split, config.network, config.train_options(),
                           [&](const net::EpochStats& e) {
                             if (epoch_lines) *epoch_lines << to_json(e).dump() << std::endl;
                           });
  net::save_checkpoint(checkpoint, *result.net);

  TrainReport r;
  r.history = std::move(result.history);
  r.best_epoch = result.best_epoch;
  for (const auto& e : r.history) {
    if (e.epoch == r.best_epoch) r.best_val_acc = e.val_acc;
  }
  r.train_samples = split.train.size();
  r.val_samples = split.val.size();
  return r;
}

EvalSplit parse_eval_split(std::string_view text) {
  if (text == "all") return EvalSplit::all;
  if (text == "train") return EvalSplit::train;
  if (text == "val") return EvalSplit::val;
  throw ArgumentError("split must be all, train or val, got '" + std::string(text) + "'");
}

EvalReport cmd_eval(const PipelineConfig& config, const std::filesystem::path& checkpoint,
                    const std::filesystem::path& data_dir, EvalSplit which) {
  auto net = net::load_checkpoint(checkpoint);
  const auto data = load_prepared(data_dir, config.hsv, net->spec().input_size, config.sync_window_ms);

  std::vector<std::size_t> indices;
  if (which == EvalSplit::all) {
    indices.resize(data.tensors.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
  } else {
    auto split = net::stratified_split(data.tensors.groups(), config.training.val_fraction, config.seed);
    indices = which == EvalSplit::train ? std::move(split.train) : std::move(split.val);
  }
  if (indices.empty()) throw DataError("evaluation set is empty");

  net::ClassWeights uniform;
  for (auto& row : uniform) row.fill(1.0);
  const auto out = net::evaluate(*net, data.tensors, indices, uniform, config.train_options());

  std::vector<BinLabels> predicted;
  predicted.reserve(out.predictions.size());
  for (const auto& p : out.predictions) predicted.push_back(p.bins);
  const auto truth = data.tensors.batch_labels(indices);

  EvalReport r;
  r.samples = indices.size();
  r.confusion = metrics::accumulate(predicted, truth);
  r.summary = metrics::summarize(r.confusion);
  r.joint_accuracy = metrics::joint_accuracy(r.confusion);
  return r;
}

TeleopReport cmd_teleop(const PipelineConfig& config, const std::filesystem::path& checkpoint,
                        const std::string& source, const std::string& sink, std::ostream* trace) {
  auto net = net::load_checkpoint(checkpoint);
  const auto frames = source == "script" ? make_script_source(config) : make_recorded_source(config, source);
  std::unique_ptr<wire::Link> link = wire::open_link(sink);
  if (sink != "loopback") link = std::make_unique<MirrorLink>(std::move(link));
  return run_teleop(config, *net, *frames, *link, trace);
}

wire::FuzzReport cmd_proto_fuzz(std::uint64_t seed, std::uint64_t frames) {
  wire::FuzzOptions o;
  o.seed = seed;
  o.frames = frames;
  return wire::run_protocol_fuzz(o);
}

json to_json(const net::EpochStats& e) {
  return {{"epoch", e.epoch},
          {"train_loss", e.train_loss},
          {"train_acc", e.train_acc},
          {"val_loss", e.val_loss},
          {"val_acc", e.val_acc}};
}

json to_json(const TrainReport& r) {
  return {{"best_epoch", r.best_epoch},
          {"best_val_acc", r.best_val_acc},
          {"epochs", r.history.size()},
          {"train_samples", r.train_samples},
          {"val_samples", r.val_samples}};
}

json to_json(const synthview::DatasetManifest& m) {
  std::set<int> gestures;
  for (const auto& s : m.samples) gestures.insert(s.gesture_id);
  return {{"images", m.samples.size()},
          {"gestures", gestures.size()},
          {"frames_per_gesture_per_view", m.options.frames_per_gesture_per_view},
          {"seed", m.options.seed}};
}

json to_json(const EvalReport& r) {
  json cm = json::array();
  for (std::size_t j = 0; j < kNumJoints; ++j) cm.push_back(r.confusion.joint(j));
  return {{"samples", r.samples},
          {"accuracy", r.summary.accuracy},
          {"precision", r.summary.precision},
          {"recall", r.summary.recall},
          {"f1", r.summary.f1},
          {"joint_accuracy", joint_array(r.joint_accuracy)},
          {"confusion", cm}};
}

json to_json(const LatencyStats& s) {
  return {{"count", s.count}, {"mean_ms", s.mean_ms}, {"p50_ms", s.p50_ms}, {"p95_ms", s.p95_ms}, {"max_ms", s.max_ms}};
}

json to_json(const TeleopReport& r) {
  const auto& l = r.latency;
  return {{"fidelity", r.fidelity},
          {"settled_ticks", r.settled_ticks},
          {"faithful_ticks", r.faithful_ticks},
          {"ticks", r.ticks},
          {"duration_s", r.duration_s},
          {"frames_captured", r.frames_captured},
          {"triplets", r.triplets},
          {"sync_dropped", r.sync_dropped},
          {"frames_encoded", r.frames_encoded},
          {"frames_ok", r.parser.frames_ok},
          {"frames_bad_checksum", r.parser.frames_bad_checksum},
          {"frames_malformed", r.parser.frames_malformed},
          {"latency",
           {{"segment", to_json(l.segment)},
            {"fuse", to_json(l.fuse)},
            {"infer", to_json(l.infer)},
            {"encode", to_json(l.encode)},
            {"transmit", to_json(l.transmit)},
            {"end_to_end", to_json(l.end_to_end)}}}};
}

json to_json(const wire::FuzzReport& r) {
  return {{"frames_injected", r.frames_injected},
          {"corrupted_injected", r.corrupted_injected},
          {"truncated_injected", r.truncated_injected},
          {"garbage_bytes", r.garbage_bytes},
          {"bytes_total", r.bytes_total},
          {"chunks", r.chunks},
          {"frames_matched", r.frames_matched},
          {"corrupt_accepted", r.corrupt_accepted},
          {"frames_missed", r.frames_missed},
          {"buffer_high_water", r.buffer_high_water},
          {"frames_ok", r.parser.frames_ok},
          {"frames_bad_checksum", r.parser.frames_bad_checksum},
          {"frames_malformed", r.parser.frames_malformed},
          {"bytes_discarded", r.parser.bytes_discarded},
          {"bytes_accepted", r.parser.bytes_accepted}};
}

}  // namespace theta::pipeline
