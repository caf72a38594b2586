#include "theta/net/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "theta/core/error.hpp"

namespace theta::net {

namespace {

constexpr std::uint32_t kMaxName = 4096;
constexpr std::uint32_t kMaxDims = 8;
constexpr std::uint32_t kMaxEntries = 1u << 20;
const std::string kSpecPrefix = "spec:";

struct Entry {
  std::string name;
  std::vector<std::uint32_t> dims;
};

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("checkpoint truncated in header");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

std::vector<Entry> table_for(Network<float>& net) {
  std::vector<Entry> t;
  t.push_back({kSpecPrefix + net.spec().encode(), {0}});
  for (const auto& s : net.state()) {
    Entry e{s.name, {}};
    for (int d : s.value->shape()) e.dims.push_back(static_cast<std::uint32_t>(d));
    t.push_back(std::move(e));
  }
  return t;
}

}  // namespace

std::size_t checkpoint_header_size(Network<float>& net) {
  std::size_t n = sizeof kCheckpointMagic + 1 + 4;
  for (const auto& e : table_for(net)) n += 4 + e.name.size() + 4 + 4 * e.dims.size();
  return n;
}

void write_checkpoint(std::ostream& out, Network<float>& net) {
  const auto table = table_for(net);
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  out.put(static_cast<char>(kCheckpointVersion));
  put_u32(out, static_cast<std::uint32_t>(table.size()));
  for (const auto& e : table) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_u32(out, static_cast<std::uint32_t>(e.dims.size()));
    for (auto d : e.dims) put_u32(out, d);
  }
  for (const auto& s : net.state()) {
    for (float v : s.value->values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw IoError("failed writing checkpoint");
}

void save_checkpoint(const std::filesystem::path& path, Network<float>& net) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_checkpoint(out, net);
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::unique_ptr<Network<float>> read_checkpoint(std::istream& in) {
  char magic[sizeof kCheckpointMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  const int version = in.get();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t count = get_u32(in);
  if (count == 0 || count > kMaxEntries) throw FormatError("implausible checkpoint entry count");
  std::vector<Entry> table(count);
  for (auto& e : table) {
    const std::uint32_t len = get_u32(in);
    if (len > kMaxName) throw FormatError("checkpoint entry name too long");
    e.name.resize(len);
    if (!in.read(e.name.data(), len)) throw FormatError("checkpoint truncated in header");
    const std::uint32_t nd = get_u32(in);
    if (nd > kMaxDims) throw FormatError("checkpoint entry has too many dimensions");
    e.dims.resize(nd);
    for (auto& d : e.dims) d = get_u32(in);
  }
  if (table[0].name.rfind(kSpecPrefix, 0) != 0 || table[0].dims != std::vector<std::uint32_t>{0}) {
    throw FormatError("checkpoint does not start with an architecture entry");
  }
  auto net = std::make_unique<Network<float>>(NetworkSpec::decode(table[0].name.substr(kSpecPrefix.size())));
  const auto expected = table_for(*net);
  if (expected.size() != table.size()) throw FormatError("checkpoint shape table does not match its architecture");
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (table[i].name != expected[i].name || table[i].dims != expected[i].dims) {
      throw FormatError("checkpoint shape table mismatch at '" + table[i].name + "'");
    }
  }
  auto state = net->state();
  std::vector<Tensor<float>::Storage> values;
  for (const auto& s : state) {
    Tensor<float>::Storage v(s.value->size());
    for (float& x : v) {
      unsigned char b[4];
      if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("checkpoint truncated in data");
      x = std::bit_cast<float>(static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
                               static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24);
    }
    values.push_back(std::move(v));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after checkpoint data");
  for (std::size_t i = 0; i < state.size(); ++i) state[i].value->values() = std::move(values[i]);
  return net;
}

std::unique_ptr<Network<float>> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace theta::net
