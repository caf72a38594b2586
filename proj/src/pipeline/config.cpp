#include "theta/pipeline/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>

#include "theta/core/error.hpp"

namespace theta::pipeline {

net::NetworkSpec default_network() {
  net::NetworkSpec spec;
  spec.blocks = {{1, 1, 16}, {6, 2, 24}, {6, 2, 32}, {6, 2, 64}, {6, 2, 96}, {6, 1, 160}};
  return spec;
}


using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were used so that leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + ": wrong type (" + std::string(it->type_name()) + ")");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section child(const char* key) {
    seen_.insert(key);
    return Section(j_.at(key), where(key));
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown key");
    }
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? std::string("config") : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Vec3 read_vec3(const json& j, const std::string& where) {
  try {
    const auto a = j.get<std::array<double, 3>>();
    return {a[0], a[1], a[2]};
  } catch (const json::exception&) {
    throw ConfigError(where + ": expected [x, y, z]");
  }
}

void read_rig(Section s, synthview::CameraRig& rig) {
  s.get("radius_mm", rig.radius_mm);
  s.get("width", rig.width);
  s.get("height", rig.height);
  s.get("frame_rate_hz", rig.frame_rate_hz);
  s.get("focal_px", rig.focal_px);
  s.finish();
}

void read_hand(Section s, synthview::HandSpec& hand) {
  s.get("palm_width_mm", hand.palm_width_mm);
  s.get("palm_height_mm", hand.palm_height_mm);
  s.get("phalanx_mm", hand.phalanx_mm);
  s.get("finger_radius_mm", hand.finger_radius_mm);
  s.get("thumb_radius_mm", hand.thumb_radius_mm);
  if (s.has("hand_color")) {
    std::array<int, 3> c{};
    s.get("hand_color", c);
    for (int v : c) {
      if (v < 0 || v > 255) throw ConfigError(s.where("hand_color") + ": channels must be 0..255");
    }
    hand.hand_color = {static_cast<std::uint8_t>(c[0]), static_cast<std::uint8_t>(c[1]),
                       static_cast<std::uint8_t>(c[2])};
  }
  for (const char* key : {"knuckle_base_points", "extension_dirs"}) {
    if (!s.has(key)) continue;
    const json& arr = s.raw(key);
    if (!arr.is_array() || arr.size() != kNumFingers) {
      throw ConfigError(s.where(key) + ": expected 5 points");
    }
    auto& dst = std::string_view(key) == "extension_dirs" ? hand.extension_dirs : hand.knuckle_base_points;
    for (std::size_t f = 0; f < kNumFingers; ++f) dst[f] = read_vec3(arr[f], s.where(key));
  }
  s.finish();
}

void read_scene(Section s, synthview::SceneRanges& scene) {
  s.get("brightness_min", scene.brightness_min);
  s.get("brightness_max", scene.brightness_max);
  s.get("noise_min", scene.noise_min);
  s.get("noise_max", scene.noise_max);
  s.finish();
}

void read_hsv(Section s, segment::HsvThresholds& hsv) {
  if (s.has("hue_bands")) {
    std::vector<std::array<double, 2>> bands;
    s.get("hue_bands", bands);
    hsv.hue_bands.clear();
    for (const auto& b : bands) hsv.hue_bands.push_back({b[0], b[1]});
  }
  s.get("sat_min", hsv.sat_min);
  s.get("val_min", hsv.val_min);
  s.finish();
}

void read_network(Section s, net::NetworkSpec& spec) {
  s.get("in_channels", spec.in_channels);
  s.get("input_size", spec.input_size);
  s.get("stem_channels", spec.stem_channels);
  s.get("stem_kernel", spec.stem_kernel);
  s.get("stem_stride", spec.stem_stride);
  if (s.has("blocks")) {
    std::vector<std::array<int, 3>> blocks;
    s.get("blocks", blocks);
    spec.blocks.clear();
    for (const auto& b : blocks) spec.blocks.push_back({b[0], b[1], b[2]});
  }
  s.finish();
}

void read_training(Section s, TrainingSettings& t) {
  s.get("epochs", t.epochs);
  s.get("batch_size", t.batch_size);
  s.get("learning_rate", t.learning_rate);
  s.get("beta1", t.beta1);
  s.get("beta2", t.beta2);
  s.get("adam_eps", t.adam_eps);
  s.get("temperature", t.temperature);
  s.get("gamma", t.gamma);
  s.get("weight_floor", t.weight_floor);
  s.get("freeze", t.freeze);
  s.get("val_fraction", t.val_fraction);
  s.finish();
}

void read_calibration(const json& j, const std::string& where, dexsim::CalibrationSet& cal) {
  if (!j.is_array() || j.size() != dexsim::kNumServos) throw ConfigError(where + ": expected 15 channel entries");
  for (std::size_t i = 0; i < dexsim::kNumServos; ++i) {
    Section s(j[i], where + "[" + std::to_string(i) + "]");
    s.get("scale", cal[i].scale);
    s.get("offset_deg", cal[i].offset_deg);
    s.get("invert", cal[i].invert);
    s.finish();
  }
}

void read_servo(Section s, ServoSettings& v) {
  s.get("max_slew_deg_per_s", v.max_slew_deg_per_s);
  s.get("time_constant_s", v.time_constant_s);
  s.get("spring_return_dip", v.spring_return_dip);
  s.get("spring_target_deg", v.spring_target_deg);
  s.get("initial_deg", v.initial_deg);
  s.finish();
}

void read_teleop(Section s, TeleopSettings& t) {
  s.get("tick_hz", t.tick_hz);
  s.get("settle_s", t.settle_s);
  s.get("tolerance_deg", t.tolerance_deg);
  s.get("starvation_s", t.starvation_s);
  s.get("camera_offsets_ms", t.camera_offsets_ms);
  s.get("pipeline_delay_ms", t.pipeline_delay_ms);
  if (s.has("script")) {
    const json& arr = s.raw("script");
    if (!arr.is_array()) throw ConfigError(s.where("script") + ": expected a list");
    t.script.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Section step(arr[i], s.where("script") + "[" + std::to_string(i) + "]");
      ScriptStep st;
      if (!arr[i].contains("gesture")) throw ConfigError(step.where("gesture") + ": required");
      step.get("gesture", st.gesture);
      step.get("hold_s", st.hold_s);
      step.finish();
      t.script.push_back(st);
    }
  }
  s.finish();
}

template <typename F>
void checked(const char* what, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

void PipelineConfig::validate() const {
  checked("rig", [&] { rig.validate(); });
  checked("hand", [&] { hand.validate(); });
  checked("scene", [&] { scene.validate(); });
  checked("hsv", [&] { hsv.validate(); });
  checked("network", [&] { network.validate(); });
  checked("calibration", [&] { dexsim::validate(calibration); });
  checked("training.freeze", [&] { net::Freeze::parse(training.freeze); });
  require(frames_per_gesture_per_view > 0, "frames_per_gesture_per_view must be positive");
  require(jitter_deg >= 0.0 && jitter_deg <= 5.0, "jitter_deg must lie in [0, 5]");
  require(sync_window_ms >= 0.0, "sync_window_ms must be non-negative");
  require(network.in_channels == 9, "network.in_channels must be 9 (three RGB views)");
  require(training.epochs >= 0, "training.epochs must be non-negative");
  require(training.batch_size > 0, "training.batch_size must be positive");
  require(training.learning_rate > 0.0, "training.learning_rate must be positive");
  require(training.beta1 >= 0.0 && training.beta1 < 1.0, "training.beta1 must lie in [0, 1)");
  require(training.beta2 >= 0.0 && training.beta2 < 1.0, "training.beta2 must lie in [0, 1)");
  require(training.adam_eps > 0.0, "training.adam_eps must be positive");
  require(training.temperature > 0.0, "training.temperature must be positive");
  require(training.gamma >= 0.0, "training.gamma must be non-negative");
  require(training.weight_floor > 0.0, "training.weight_floor must be positive");
  require(training.val_fraction >= 0.0 && training.val_fraction < 1.0, "training.val_fraction must lie in [0, 1)");
  require(servo.max_slew_deg_per_s > 0.0, "servo.max_slew_deg_per_s must be positive");
  require(servo.time_constant_s > 0.0, "servo.time_constant_s must be positive");
  require(servo.initial_deg >= 0.0 && servo.initial_deg <= 180.0, "servo.initial_deg must lie in [0, 180]");
  require(!link.empty(), "link must name 'loopback' or a device path");
  require(teleop.tick_hz > 0.0, "teleop.tick_hz must be positive");
  require(teleop.settle_s >= 0.0, "teleop.settle_s must be non-negative");
  require(teleop.tolerance_deg >= 0.0, "teleop.tolerance_deg must be non-negative");
  require(teleop.starvation_s > 0.0, "teleop.starvation_s must be positive");
  require(teleop.pipeline_delay_ms >= 0.0, "teleop.pipeline_delay_ms must be non-negative");
  for (double o : teleop.camera_offsets_ms) require(o >= 0.0, "teleop.camera_offsets_ms must be non-negative");
  for (const auto& st : teleop.script) require(st.hold_s > 0.0, "teleop.script hold_s must be positive");
}

std::vector<GestureAnnotation> PipelineConfig::gesture_table() const {
  if (gestures == "builtin") return builtin_gestures();
  return load_gesture_table(gestures);
}

synthview::GenerationOptions PipelineConfig::generation() const {
  synthview::GenerationOptions o;
  o.frames_per_gesture_per_view = frames_per_gesture_per_view;
  o.rig = rig;
  o.hand = hand;
  o.scene = scene;
  o.jitter_deg = jitter_deg;
  o.seed = seed;
  return o;
}

net::TrainOptions PipelineConfig::train_options() const {
  net::TrainOptions o;
  o.epochs = training.epochs;
  o.batch_size = training.batch_size;
  o.adam = {training.learning_rate, training.beta1, training.beta2, training.adam_eps};
  o.temperature = training.temperature;
  o.gamma = training.gamma;
  o.weight_floor = training.weight_floor;
  o.freeze = net::Freeze::parse(training.freeze);
  o.seed = seed;
  return o;
}

std::array<dexsim::ServoParams, dexsim::kNumServos> PipelineConfig::servo_params() const {
  std::array<dexsim::ServoParams, dexsim::kNumServos> p{};
  for (std::size_t i = 0; i < dexsim::kNumServos; ++i) {
    p[i].max_slew_deg_per_s = servo.max_slew_deg_per_s;
    p[i].time_constant_s = servo.time_constant_s;
    p[i].spring_return = servo.spring_return_dip && JointId::from_flat(i).joint() == Joint::dip;
    p[i].spring_target_deg = servo.spring_target_deg;
  }
  return p;
}

PipelineConfig config_from_json(const json& doc) {
  PipelineConfig c;
  Section s(doc, "");
  s.get("seed", c.seed);
  s.get("gestures", c.gestures);
  if (s.has("rig")) read_rig(s.child("rig"), c.rig);
  if (s.has("hand")) read_hand(s.child("hand"), c.hand);
  if (s.has("scene")) read_scene(s.child("scene"), c.scene);
  s.get("frames_per_gesture_per_view", c.frames_per_gesture_per_view);
  s.get("jitter_deg", c.jitter_deg);
  if (s.has("hsv")) read_hsv(s.child("hsv"), c.hsv);
  s.get("sync_window_ms", c.sync_window_ms);
  if (s.has("network")) read_network(s.child("network"), c.network);
  if (s.has("training")) read_training(s.child("training"), c.training);
  if (s.has("calibration")) read_calibration(s.raw("calibration"), "calibration", c.calibration);
  if (s.has("servo")) read_servo(s.child("servo"), c.servo);
  s.get("link", c.link);
  if (s.has("teleop")) read_teleop(s.child("teleop"), c.teleop);
  s.finish();
  c.validate();
  return c;
}

json config_to_json(const PipelineConfig& c) {
  json hand{{"palm_width_mm", c.hand.palm_width_mm},
            {"palm_height_mm", c.hand.palm_height_mm},
            {"phalanx_mm", c.hand.phalanx_mm},
            {"finger_radius_mm", c.hand.finger_radius_mm},
            {"thumb_radius_mm", c.hand.thumb_radius_mm},
            {"hand_color", {c.hand.hand_color.r, c.hand.hand_color.g, c.hand.hand_color.b}},
            {"knuckle_base_points", json::array()},
            {"extension_dirs", json::array()}};
  for (std::size_t f = 0; f < kNumFingers; ++f) {
    const Vec3 k = c.hand.knuckle_base_points[f], d = c.hand.extension_dirs[f];
    hand["knuckle_base_points"].push_back({k.x, k.y, k.z});
    hand["extension_dirs"].push_back({d.x, d.y, d.z});
  }
  json bands = json::array();
  for (const auto& b : c.hsv.hue_bands) bands.push_back({b.lo, b.hi});
  json blocks = json::array();
  for (const auto& b : c.network.blocks) blocks.push_back({b.expansion, b.stride, b.out_channels});
  json cal = json::array();
  for (const auto& ch : c.calibration) cal.push_back({{"scale", ch.scale}, {"offset_deg", ch.offset_deg}, {"invert", ch.invert}});
  json script = json::array();
  for (const auto& st : c.teleop.script) script.push_back({{"gesture", st.gesture}, {"hold_s", st.hold_s}});
  const auto& t = c.training;
  return {
      {"seed", c.seed},
      {"gestures", c.gestures},
      {"rig",
       {{"radius_mm", c.rig.radius_mm},
        {"width", c.rig.width},
        {"height", c.rig.height},
        {"frame_rate_hz", c.rig.frame_rate_hz},
        {"focal_px", c.rig.focal_px}}},
      {"hand", hand},
      {"scene",
       {{"brightness_min", c.scene.brightness_min},
        {"brightness_max", c.scene.brightness_max},
        {"noise_min", c.scene.noise_min},
        {"noise_max", c.scene.noise_max}}},
      {"frames_per_gesture_per_view", c.frames_per_gesture_per_view},
      {"jitter_deg", c.jitter_deg},
      {"hsv", {{"hue_bands", bands}, {"sat_min", c.hsv.sat_min}, {"val_min", c.hsv.val_min}}},
      {"sync_window_ms", c.sync_window_ms},
      {"network",
       {{"in_channels", c.network.in_channels},
        {"input_size", c.network.input_size},
        {"stem_channels", c.network.stem_channels},
        {"stem_kernel", c.network.stem_kernel},
        {"stem_stride", c.network.stem_stride},
        {"blocks", blocks}}},
      {"training",
       {{"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"learning_rate", t.learning_rate},
        {"beta1", t.beta1},
        {"beta2", t.beta2},
        {"adam_eps", t.adam_eps},
        {"temperature", t.temperature},
        {"gamma", t.gamma},
        {"weight_floor", t.weight_floor},
        {"freeze", t.freeze},
        {"val_fraction", t.val_fraction}}},
      {"calibration", cal},
      {"servo",
       {{"max_slew_deg_per_s", c.servo.max_slew_deg_per_s},
        {"time_constant_s", c.servo.time_constant_s},
        {"spring_return_dip", c.servo.spring_return_dip},
        {"spring_target_deg", c.servo.spring_target_deg},
        {"initial_deg", c.servo.initial_deg}}},
      {"link", c.link},
      {"teleop",
       {{"tick_hz", c.teleop.tick_hz},
        {"settle_s", c.teleop.settle_s},
        {"tolerance_deg", c.teleop.tolerance_deg},
        {"starvation_s", c.teleop.starvation_s},
        {"camera_offsets_ms", c.teleop.camera_offsets_ms},
        {"pipeline_delay_ms", c.teleop.pipeline_delay_ms},
        {"script", script}}},
  };
}

std::uint64_t parse_seed(std::string_view text) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || p != text.data() + text.size()) {
    throw ConfigError("THETA_SEED must be an unsigned integer, got '" + std::string(text) + "'");
  }
  return v;
}

namespace {

void apply_env_seed(PipelineConfig& c) {
  if (const char* env = std::getenv("THETA_SEED")) c.seed = parse_seed(env);
}

}  // namespace

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  PipelineConfig c = config_from_json(doc);
  apply_env_seed(c);
  return c;
}

PipelineConfig default_config() {
  PipelineConfig c;
  apply_env_seed(c);
  return c;
}

}  // namespace theta::pipeline
