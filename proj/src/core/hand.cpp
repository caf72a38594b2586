#include "theta/core/hand.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "theta/core/error.hpp"

namespace theta {

std::string_view finger_name(Finger f) {
  switch (f) {
    case Finger::thumb: return "thumb";
    case Finger::index: return "index";
    case Finger::middle: return "middle";
    case Finger::ring: return "ring";
    case Finger::pinky: return "pinky";
  }
  return "?";
}

std::string_view joint_name(Joint j) {
  switch (j) {
    case Joint::mcp: return "mcp";
    case Joint::pip: return "pip";
    case Joint::dip: return "dip";
  }
  return "?";
}

JointId JointId::from_flat(std::size_t flat) {
  if (flat >= kNumJoints) throw RangeError("joint index " + std::to_string(flat) + " outside 0..14");
  return JointId(static_cast<Finger>(flat / kJointsPerFinger),
                 static_cast<Joint>(flat % kJointsPerFinger));
}

AngleBin bin_encode(double angle_deg) {
  if (!(angle_deg >= kMinEncodableDeg && angle_deg <= kMaxEncodableDeg)) {
    std::ostringstream msg;
    msg << "angle " << angle_deg << " deg outside encodable range [85, 185]";
    throw RangeError(msg.str());
  }
  const double raw = std::round((angle_deg - kMinAnnotatedDeg) / kBinWidthDeg);
  return AngleBin{std::clamp(static_cast<int>(raw), 0, static_cast<int>(kNumBins) - 1)};
}

double bin_decode(AngleBin bin) { return bin.center_deg(); }

BinLabels encode_all(const JointAngles& angles) {
  BinLabels out{};
  for (std::size_t j = 0; j < kNumJoints; ++j) out[j] = bin_encode(angles[j]).index;
  return out;
}

std::string_view gesture_table_header() {
  return "gesture_id,gesture_name,"
         "thumb_mcp_deg,thumb_pip_deg,thumb_dip_deg,"
         "index_mcp_deg,index_pip_deg,index_dip_deg,"
         "middle_mcp_deg,middle_pip_deg,middle_dip_deg,"
         "ring_mcp_deg,ring_pip_deg,ring_dip_deg,"
         "pinky_mcp_deg,pinky_pip_deg,pinky_dip_deg";
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

[[noreturn]] void row_error(std::size_t line_no, const std::string& what) {
  throw ParseError("gesture table line " + std::to_string(line_no) + ": " + what);
}

int parse_int(std::string_view field, std::size_t line_no, std::string_view column) {
  int value = 0;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc{} || ptr != end) {
    row_error(line_no, "non-numeric value '" + std::string(field) + "' in column " +
                           std::string(column));
  }
  return value;
}

}  // namespace

std::vector<GestureAnnotation> parse_gesture_table(std::istream& in) {
  const auto columns = split_commas(gesture_table_header());
  std::vector<GestureAnnotation> table;
  std::set<int> seen;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      // Tolerate a UTF-8 byte-order mark on the header.
      std::string_view head = line;
      if (head.starts_with("\xEF\xBB\xBF")) head.remove_prefix(3);
      if (head != gesture_table_header()) row_error(line_no, "unexpected header");
      have_header = true;
      continue;
    }
    if (line.empty()) continue;

    const auto fields = split_commas(line);
    if (fields.size() != columns.size()) {
      row_error(line_no, "expected " + std::to_string(columns.size()) + " columns, found " +
                             std::to_string(fields.size()));
    }
    GestureAnnotation g;
    g.gesture_id = parse_int(fields[0], line_no, columns[0]);
    if (g.gesture_id <= 0) row_error(line_no, "gesture_id must be positive");
    if (!seen.insert(g.gesture_id).second) {
      row_error(line_no, "duplicate gesture_id " + std::to_string(g.gesture_id));
    }
    g.gesture_name = std::string(fields[1]);
    if (g.gesture_name.empty()) row_error(line_no, "empty gesture_name");
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      const int deg = parse_int(fields[2 + j], line_no, columns[2 + j]);
      if (deg < kMinAnnotatedDeg || deg > kMaxAnnotatedDeg) {
        row_error(line_no, "angle " + std::to_string(deg) + " outside [90, 180] in column " +
                               std::string(columns[2 + j]));
      }
      g.angles[j] = deg;
    }
    table.push_back(std::move(g));
  }
  if (!have_header) row_error(1, "missing header");
  return table;
}

std::vector<GestureAnnotation> load_gesture_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open gesture table " + path);
  return parse_gesture_table(in);
}

void write_gesture_table(std::ostream& out, std::span<const GestureAnnotation> table) {
  out << gesture_table_header() << '\n';
  for (const auto& g : table) {
    out << g.gesture_id << ',' << g.gesture_name;
    for (double a : g.angles.deg) out << ',' << std::lround(a);
    out << '\n';
  }
}

const GestureAnnotation* find_gesture(std::span<const GestureAnnotation> table,
                                      std::string_view name_or_id) {
  for (const auto& g : table) {
    if (g.gesture_name == name_or_id || std::to_string(g.gesture_id) == name_or_id) return &g;
  }
  return nullptr;
}

JointAngles jitter(const JointAngles& angles, double amplitude_deg, Rng& rng) {
  if (!(amplitude_deg >= 0.0)) throw ArgumentError("jitter amplitude must be non-negative");
  JointAngles out = angles;
  for (double& a : out.deg) a += amplitude_deg * (2.0 * rng.uniform() - 1.0);
  return out;
}

double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

double joint_angle_from_points(Vec3 a, Vec3 b, Vec3 c) {
  const Vec3 u = a - b;
  const Vec3 v = c - b;
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu <= kDegenerateSegment || nv <= kDegenerateSegment) {
    throw GeometryError("degenerate segment at joint vertex");
  }
  const double cosine = std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
  return std::acos(cosine) * 180.0 / std::numbers::pi;
}

}  // namespace theta
