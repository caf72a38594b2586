#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>

#include "theta/net/network.hpp"

namespace theta::net {

/// Layout, all integers little-endian:
///   "THETA1\0" | version u8 = 1 | entry count u32 |
///   per entry: name length u32, name bytes, ndims u32, dims u32 x ndims |
///   float32 values of every entry in table order.
/// The first entry is named "spec:<NetworkSpec::encode()>" with dims [0] and
/// carries the architecture; the rest follow Network::state() order.
inline constexpr char kCheckpointMagic[7] = {'T', 'H', 'E', 'T', 'A', '1', '\0'};
inline constexpr unsigned char kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, Network<float>& net);
void save_checkpoint(const std::filesystem::path& path, Network<float>& net);

/// Throws FormatError on a bad magic, unknown version, inconsistent shape
/// table, truncation or trailing bytes; nothing is returned on failure.
std::unique_ptr<Network<float>> read_checkpoint(std::istream& in);
/// IoError when the file cannot be opened.
std::unique_ptr<Network<float>> load_checkpoint(const std::filesystem::path& path);

/// Byte length of everything before the float data.
std::size_t checkpoint_header_size(Network<float>& net);

}  // namespace theta::net
