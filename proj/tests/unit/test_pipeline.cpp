#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "theta/core/error.hpp"
#include "theta/net/checkpoint.hpp"
#include "theta/pipeline/commands.hpp"
#include "theta/pipeline/config.hpp"
#include "theta/pipeline/data.hpp"
#include "theta/pipeline/teleop.hpp"

using namespace theta;
using namespace theta::pipeline;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("theta_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

std::string config_error(const json& doc) {
  try {
    config_from_json(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    value ? setenv(name, value, 1) : unsetenv(name);
  }
  ~ScopedEnv() { old_.empty() ? unsetenv(name_) : setenv(name_, old_.c_str(), 1); }

 private:
  const char* name_;
  std::string old_;
};

// Two gestures, small frames and a small network: trains to perfection in
// well under a minute.
PipelineConfig toy_config(const fs::path& dir) {
  const auto& table = builtin_gestures();
  std::vector<GestureAnnotation> two{*find_gesture(table, "Open Palm"), *find_gesture(table, "Closed Fist")};
  const fs::path csv = dir / "gestures.csv";
  std::ofstream out(csv);
  write_gesture_table(out, two);
  out.close();

  PipelineConfig c;
  c.seed = 11;
  c.gestures = csv.string();
  c.rig.width = 320;
  c.rig.height = 240;
  c.rig.focal_px = 220.0;
  c.frames_per_gesture_per_view = 12;
  c.network.input_size = 32;
  c.network.stem_channels = 8;
  c.network.blocks = {{2, 2, 16}, {2, 1, 16}};
  c.training.epochs = 12;
  c.training.batch_size = 6;
  c.training.learning_rate = 1e-2;
  c.training.val_fraction = 0.25;
  c.teleop.script = {{"Open Palm", 3.0}};
  return c;
}

}  // namespace

// ---- config -------------------------------------------------------------------

TEST(Config, DefaultsRoundTrip) {
  const json j = config_to_json(PipelineConfig{});
  EXPECT_EQ(config_to_json(config_from_json(j)), j);
  EXPECT_EQ(config_to_json(config_from_json(json::object())), j);
}

TEST(Config, PartialDocumentKeepsDefaults) {
  const auto c = config_from_json(json{{"training", {{"epochs", 3}}}, {"teleop", {{"script", {{{"gesture", "7"}}}}}}});
  EXPECT_EQ(c.training.epochs, 3);
  EXPECT_EQ(c.training.batch_size, 16);
  EXPECT_DOUBLE_EQ(c.training.learning_rate, 1e-3);
  ASSERT_EQ(c.teleop.script.size(), 1u);
  EXPECT_EQ(c.teleop.script[0].gesture, "7");
  EXPECT_DOUBLE_EQ(c.teleop.script[0].hold_s, 3.0);
  EXPECT_EQ(c.network, default_network());
}

TEST(Config, UnknownKeysNamePath) {
  EXPECT_NE(config_error({{"bogus", 1}}).find("bogus: unknown key"), std::string::npos);
  EXPECT_NE(config_error({{"training", {{"epoch", 3}}}}).find("training.epoch"), std::string::npos);
  EXPECT_NE(config_error({{"teleop", {{"script", {{{"gesture", "1"}, {"hold", 2}}}}}}}).find("teleop.script[0].hold"),
            std::string::npos);
}

TEST(Config, WrongTypesNamePath) {
  EXPECT_NE(config_error({{"rig", {{"width", "wide"}}}}).find("rig.width"), std::string::npos);
  EXPECT_NE(config_error({{"rig", 3}}).find("rig"), std::string::npos);
  EXPECT_FALSE(config_error({{"hand", {{"knuckle_base_points", {{0, 0, 0}}}}}}).empty());
}

TEST(Config, InvalidValuesRejected) {
  EXPECT_FALSE(config_error({{"jitter_deg", 7.0}}).empty());
  EXPECT_FALSE(config_error({{"network", {{"in_channels", 3}}}}).empty());
  EXPECT_FALSE(config_error({{"training", {{"freeze", "some"}}}}).empty());
  EXPECT_FALSE(config_error({{"training", {{"learning_rate", 0.0}}}}).empty());
  EXPECT_FALSE(config_error({{"hsv", {{"sat_min", 2.0}}}}).empty());
  json cal = config_to_json(PipelineConfig{})["calibration"];
  cal[4]["scale"] = 0.0;
  EXPECT_FALSE(config_error({{"calibration", cal}}).empty());
  EXPECT_FALSE(config_error({{"frames_per_gesture_per_view", 0}}).empty());
}

TEST(Config, ThetaSeedOverridesFile) {
  const fs::path dir = scratch("seed");
  std::ofstream(dir / "c.json") << R"({"seed": 7})";
  {
    ScopedEnv env("THETA_SEED", nullptr);
    EXPECT_EQ(load_config(dir / "c.json").seed, 7u);
    EXPECT_EQ(default_config().seed, 0u);
  }
  {
    ScopedEnv env("THETA_SEED", "42");
    EXPECT_EQ(load_config(dir / "c.json").seed, 42u);
    EXPECT_EQ(default_config().seed, 42u);
  }
  {
    ScopedEnv env("THETA_SEED", "4x");
    EXPECT_THROW(load_config(dir / "c.json"), ConfigError);
  }
}

TEST(Config, ParseSeed) {
  EXPECT_EQ(parse_seed("0"), 0u);
  EXPECT_EQ(parse_seed("18446744073709551615"), 18446744073709551615ull);
  for (const char* bad : {"", "-1", "1.5", " 3", "18446744073709551616"}) EXPECT_THROW(parse_seed(bad), ConfigError) << bad;
}

TEST(Config, FileErrors) {
  const fs::path dir = scratch("files");
  EXPECT_THROW(load_config(dir / "absent.json"), IoError);
  std::ofstream(dir / "broken.json") << "{\"seed\": ";
  EXPECT_THROW(load_config(dir / "broken.json"), ConfigError);
}

// ---- plumbing -----------------------------------------------------------------

TEST(ExitCodes, StableMapping) {
  EXPECT_EQ(exit_code_for(ConfigError("x")), 2);
  EXPECT_EQ(exit_code_for(ArgumentError("x")), 2);
  EXPECT_EQ(exit_code_for(DataError("x")), 2);
  EXPECT_EQ(exit_code_for(ShapeError("x")), 2);
  EXPECT_EQ(exit_code_for(IoError("x")), 3);
  EXPECT_EQ(exit_code_for(FormatError("x")), 3);
  EXPECT_EQ(exit_code_for(StreamError("x")), 4);
  EXPECT_EQ(exit_code_for(SyncError("x")), 4);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), 1);
}

TEST(Latency, NearestRankPercentiles) {
  std::vector<double> v;
  for (int i = 20; i >= 1; --i) v.push_back(i);
  const auto s = summarize_latency(v);
  EXPECT_EQ(s.count, 20u);
  EXPECT_DOUBLE_EQ(s.mean_ms, 10.5);
  EXPECT_DOUBLE_EQ(s.p50_ms, 10.0);
  EXPECT_DOUBLE_EQ(s.p95_ms, 19.0);
  EXPECT_DOUBLE_EQ(s.max_ms, 20.0);

  const auto one = summarize_latency({4.0});
  EXPECT_DOUBLE_EQ(one.p50_ms, 4.0);
  EXPECT_DOUBLE_EQ(one.p95_ms, 4.0);
  EXPECT_EQ(summarize_latency({}).count, 0u);
}

TEST(ProtoFuzz, ZeroFramesAndSeededRepeat) {
  const auto zero = cmd_proto_fuzz(3, 0);
  EXPECT_EQ(zero, wire::FuzzReport{});
  EXPECT_EQ(cmd_proto_fuzz(9, 500), cmd_proto_fuzz(9, 500));
  const auto r = cmd_proto_fuzz(9, 500);
  EXPECT_EQ(r.parser.frames_ok, 500u);
  EXPECT_EQ(r.corrupt_accepted, 0u);
}

// ---- dataset-backed commands ---------------------------------------------------

TEST(Gen, CountsAndDeterminism) {
  const fs::path dir = scratch("gen");
  PipelineConfig c = toy_config(dir);
  const auto m = cmd_gen(c, dir / "a", 4);
  EXPECT_EQ(m.samples.size(), 2u * 3u * 4u);
  cmd_gen(c, dir / "b", 4);
  EXPECT_EQ(tree(dir / "a"), tree(dir / "b"));
  EXPECT_THROW(cmd_gen(c, dir / "c", 0), ConfigError);
  EXPECT_THROW(cmd_gen(c, dir / "c", -2), ConfigError);

  const auto data = load_prepared(dir / "a", c.hsv, 32, c.sync_window_ms);
  EXPECT_EQ(data.triplets.size(), 8u);
  EXPECT_EQ(data.tensors.size(), 8u);
  EXPECT_EQ(data.tensors.channels(), 9);
}

TEST(Gen, MissingViewIsDataError) {
  const fs::path dir = scratch("missing_view");
  PipelineConfig c = toy_config(dir);
  auto m = cmd_gen(c, dir / "d", 2);
  m.samples.pop_back();
  EXPECT_THROW(group_triplets(m), DataError);
}

class ToyPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = scratch("toy");
    config_ = toy_config(dir_);
    cmd_gen(config_, dir_ / "data");
    std::ostringstream lines;
    report_ = cmd_train(config_, dir_ / "data", dir_ / "model.bin", &lines);
    lines_ = lines.str();
  }

  static inline fs::path dir_;
  static inline PipelineConfig config_;
  static inline TrainReport report_;
  static inline std::string lines_;
};

TEST_F(ToyPipeline, TrainReachesFullValidationAccuracy) {
  EXPECT_EQ(report_.best_val_acc, 1.0);
  EXPECT_EQ(report_.train_samples, 18u);
  EXPECT_EQ(report_.val_samples, 6u);
  std::istringstream in(lines_);
  std::string line;
  int epochs = 0;
  while (std::getline(in, line)) EXPECT_EQ(json::parse(line).at("epoch").get<int>(), ++epochs);
  EXPECT_EQ(epochs, config_.training.epochs);
}

TEST_F(ToyPipeline, TrainingIsReproducible) {
  cmd_train(config_, dir_ / "data", dir_ / "again.bin");
  EXPECT_EQ(slurp(dir_ / "model.bin"), slurp(dir_ / "again.bin"));
}

TEST_F(ToyPipeline, EvalOnTrainingSetIsPerfect) {
  const auto r = cmd_eval(config_, dir_ / "model.bin", dir_ / "data", EvalSplit::train);
  EXPECT_EQ(r.samples, 18u);
  EXPECT_EQ(r.summary.accuracy, 1.0);
  EXPECT_EQ(r.summary.precision, 1.0);
  EXPECT_EQ(r.summary.recall, 1.0);
  EXPECT_EQ(r.summary.f1, 1.0);
  const auto all = cmd_eval(config_, dir_ / "model.bin", dir_ / "data");
  EXPECT_EQ(all.samples, 24u);
  const auto& s = all.summary;
  EXPECT_NEAR(s.f1, 2 * s.precision * s.recall / (s.precision + s.recall), 1e-12);
  const json j = to_json(all);
  EXPECT_EQ(j.at("confusion").size(), kNumJoints);
}

TEST_F(ToyPipeline, EmptyEvalSetIsDataError) {
  PipelineConfig c = config_;
  c.training.val_fraction = 0.0;
  EXPECT_THROW(cmd_eval(c, dir_ / "model.bin", dir_ / "data", EvalSplit::val), DataError);
  EXPECT_THROW(cmd_eval(c, dir_ / "absent.bin", dir_ / "data"), IoError);
}

TEST_F(ToyPipeline, MissingManifestIsIoError) {
  EXPECT_THROW(cmd_train(config_, dir_ / "nowhere", dir_ / "x.bin"), IoError);
}

TEST_F(ToyPipeline, ZeroEpochsWritesInitialization) {
  PipelineConfig c = config_;
  c.training.epochs = 0;
  const auto r = cmd_train(c, dir_ / "data", dir_ / "init.bin");
  EXPECT_EQ(r.best_epoch, -1);
  auto loaded = net::load_checkpoint(dir_ / "init.bin");
  net::Network<float> fresh(c.network);
  fresh.initialize(c.seed);
  EXPECT_EQ(loaded->snapshot(), fresh.snapshot());
}

TEST_F(ToyPipeline, FreezeKeepsFrozenStagesBitIdentical) {
  PipelineConfig c = config_;
  c.training.epochs = 2;
  c.training.freeze = "all_but_last_2";
  cmd_train(c, dir_ / "data", dir_ / "frozen.bin");
  auto trained = net::load_checkpoint(dir_ / "frozen.bin");
  net::Network<float> fresh(c.network);
  fresh.initialize(c.seed);
  fresh.set_trainable_tail(2);
  std::set<std::string> frozen;
  for (std::size_t i = 0; i < fresh.first_trainable(); ++i) frozen.insert(fresh.stage_name(i));
  ASSERT_FALSE(frozen.empty());

  auto a = fresh.state();
  auto b = trained->state();
  ASSERT_EQ(a.size(), b.size());
  std::size_t compared = 0, changed = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string stage = a[i].name.substr(0, a[i].name.find('.'));
    if (frozen.count(stage)) {
      EXPECT_EQ(*a[i].value, *b[i].value) << a[i].name;
      ++compared;
    } else {
      changed += !(*a[i].value == *b[i].value);
    }
  }
  EXPECT_GT(compared, 0u);
  EXPECT_GT(changed, 0u);
}

TEST_F(ToyPipeline, TeleopHoldsOpenPalm) {
  const auto r = cmd_teleop(config_, dir_ / "model.bin", "script", "loopback");
  EXPECT_GE(r.fidelity, 0.9);
  EXPECT_EQ(r.ticks, 300u);
  EXPECT_EQ(r.settled_ticks, 200u);
  EXPECT_EQ(r.parser.frames_ok, r.frames_encoded);
  EXPECT_EQ(r.frames_encoded, r.triplets);
  EXPECT_GT(r.triplets, 80u);
  EXPECT_EQ(r.latency.segment.count, r.frames_captured);
  for (const auto* s : {&r.latency.segment, &r.latency.fuse, &r.latency.infer, &r.latency.encode,
                        &r.latency.transmit, &r.latency.end_to_end}) {
    EXPECT_LE(s->p50_ms, s->p95_ms);
    EXPECT_LE(s->p95_ms, s->max_ms);
  }
}

TEST_F(ToyPipeline, TeleopFollowsGestureChanges) {
  PipelineConfig c = config_;
  c.teleop.script = {{"Closed Fist", 2.0}, {"Open Palm", 2.0}, {"Closed Fist", 2.0}};
  std::ostringstream trace;
  const auto r = cmd_teleop(c, dir_ / "model.bin", "script", "loopback", &trace);
  EXPECT_GE(r.fidelity, 0.9);
  EXPECT_EQ(r.settled_ticks, 300u);
  std::size_t rows = 0;
  for (char ch : trace.str()) rows += ch == '\n';
  EXPECT_EQ(rows, r.ticks + 1);

  const auto again = cmd_teleop(c, dir_ / "model.bin", "script", "loopback");
  EXPECT_EQ(again.faithful_ticks, r.faithful_ticks);
  EXPECT_EQ(again.parser, r.parser);
}

TEST_F(ToyPipeline, TeleopReplaysRecordedDataset) {
  // Each gesture only lasts 12 frames, shorter than the default settle time.
  PipelineConfig c = config_;
  c.teleop.settle_s = 0.2;
  const auto r = cmd_teleop(c, dir_ / "model.bin", (dir_ / "data").string(), "loopback");
  EXPECT_EQ(r.triplets, 24u);
  EXPECT_EQ(r.parser.frames_ok, 24u);
  EXPECT_GT(r.settled_ticks, 0u);
}

TEST_F(ToyPipeline, TeleopStarvationIsStreamError) {
  PipelineConfig c = config_;
  c.teleop.camera_offsets_ms = {0.0, 0.0, 2500.0};
  try {
    cmd_teleop(c, dir_ / "model.bin", "script", "loopback");
    FAIL() << "expected StreamError";
  } catch (const StreamError& e) {
    EXPECT_EQ(exit_code_for(e), 4);
  }
}

TEST_F(ToyPipeline, TeleopRejectsUnknownGesture) {
  PipelineConfig c = config_;
  c.teleop.script = {{"Jazz Hands", 1.0}};
  EXPECT_THROW(cmd_teleop(c, dir_ / "model.bin", "script", "loopback"), ConfigError);
}
