#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "theta/core/error.hpp"
#include "theta/pipeline/commands.hpp"

namespace pl = theta::pipeline;

namespace {

// "Open Palm:3,Closed Fist:2.5,7" -> steps; a bare entry holds 3 s.
std::vector<pl::ScriptStep> parse_script(const std::string& text) {
  std::vector<pl::ScriptStep> steps;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    pl::ScriptStep step;
    const auto colon = item.rfind(':');
    step.gesture = item.substr(0, colon);
    if (colon != std::string::npos) {
      try {
        step.hold_s = std::stod(item.substr(colon + 1));
      } catch (const std::exception&) {
        throw theta::ConfigError("--script: bad hold time in '" + item + "'");
      }
    }
    if (step.gesture.empty()) throw theta::ConfigError("--script: empty gesture name");
    steps.push_back(step);
  }
  if (steps.empty()) throw theta::ConfigError("--script is empty");
  return steps;
}

void emit(const nlohmann::json& j) { std::cout << j.dump() << std::endl; }

}  // namespace

int main(int argc, char** argv) {
  auto log = spdlog::stderr_color_mt("theta");
  spdlog::set_default_logger(log);
  spdlog::set_pattern("[%H:%M:%S.%e] %^%l%$ %v");

  CLI::App app{"Multi-view hand joint-angle classifier with servo teleoperation"};
  app.require_subcommand(1);
  std::string config_path;
  bool verbose = false;
  app.add_option("--config", config_path, "Pipeline configuration (JSON)");
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto* gen = app.add_subcommand("gen", "Render a synthetic multi-view dataset");
  std::string gen_out;
  std::optional<int> gen_count;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--frames-per-gesture", gen_count, "Frames per gesture per view");

  auto* train = app.add_subcommand("train", "Train the classifier on a dataset");
  std::string train_data, train_ckpt;
  std::optional<int> train_epochs;
  std::optional<std::string> train_freeze;
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--checkpoint,--out", train_ckpt, "Checkpoint to write")->required();
  train->add_option("--epochs", train_epochs, "Override training.epochs");
  train->add_option("--freeze", train_freeze, "none or all_but_last_<k>");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  std::string eval_ckpt, eval_data, eval_split = "all";
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint to load")->required();
  eval->add_option("--data", eval_data, "Dataset directory")->required();
  eval->add_option("--split", eval_split, "all, train or val");

  auto* teleop = app.add_subcommand("teleop", "Run the closed teleoperation loop");
  std::string tele_ckpt, tele_source = "script", tele_trace;
  std::optional<std::string> tele_sink, tele_script;
  teleop->add_option("--checkpoint", tele_ckpt, "Checkpoint to load")->required();
  teleop->add_option("--source", tele_source, "'script' or a recorded dataset directory");
  teleop->add_option("--sink", tele_sink, "'loopback' or a serial device (default: config link)");
  teleop->add_option("--script", tele_script, "Gesture script, e.g. \"Open Palm:3,Closed Fist:3\"");
  teleop->add_option("--trace", tele_trace, "Write a servo trace CSV");

  auto* fuzz = app.add_subcommand("proto-fuzz", "Fuzz the servo frame parser");
  std::optional<std::uint64_t> fuzz_seed;
  std::uint64_t fuzz_frames = 10000;
  fuzz->add_option("--seed", fuzz_seed, "Seed (default: config seed)");
  fuzz->add_option("--frames,-n", fuzz_frames, "Valid frames to inject");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pl::kExitConfig;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    pl::PipelineConfig config = config_path.empty() ? pl::default_config() : pl::load_config(config_path);
    spdlog::debug("seed {}", config.seed);

    if (*gen) {
      spdlog::info("rendering dataset into {}", gen_out);
      const auto manifest = pl::cmd_gen(config, gen_out, gen_count);
      spdlog::info("wrote {} images", manifest.samples.size());
      emit(pl::to_json(manifest));
    } else if (*train) {
      if (train_epochs) config.training.epochs = *train_epochs;
      if (train_freeze) config.training.freeze = *train_freeze;
      config.validate();
      spdlog::info("training {} epochs on {}", config.training.epochs, train_data);
      const auto report = pl::cmd_train(config, train_data, train_ckpt, &std::cout);
      spdlog::info("best epoch {} (val acc {:.4f}), checkpoint {}", report.best_epoch, report.best_val_acc, train_ckpt);
      auto j = pl::to_json(report);
      j["checkpoint"] = train_ckpt;
      emit(j);
    } else if (*eval) {
      const auto report = pl::cmd_eval(config, eval_ckpt, eval_data, pl::parse_eval_split(eval_split));
      spdlog::info("evaluated {} samples", report.samples);
      emit(pl::to_json(report));
    } else if (*teleop) {
      if (tele_script) config.teleop.script = parse_script(*tele_script);
      const std::string sink = tele_sink.value_or(config.link);
      std::ofstream trace;
      if (!tele_trace.empty()) {
        trace.open(tele_trace);
        if (!trace) throw theta::IoError("cannot write trace " + tele_trace);
      }
      spdlog::info("teleop from {} to {}", tele_source, sink);
      const auto report = pl::cmd_teleop(config, tele_ckpt, tele_source, sink, trace.is_open() ? &trace : nullptr);
      spdlog::info("fidelity {:.3f}, end-to-end p95 {:.1f} ms", report.fidelity, report.latency.end_to_end.p95_ms);
      emit(pl::to_json(report));
    } else if (*fuzz) {
      emit(pl::to_json(pl::cmd_proto_fuzz(fuzz_seed.value_or(config.seed), fuzz_frames)));
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return pl::exit_code_for(e);
  }
  return pl::kExitOk;
}
