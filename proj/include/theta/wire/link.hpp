#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace theta::wire {

/// Byte transport between the serial node and the hand controller.
class Link {
 public:
  virtual ~Link() = default;
  virtual void write(std::string_view bytes) = 0;
  /// Returns whatever bytes are available without blocking.
  virtual std::vector<std::uint8_t> read_available() = 0;
  virtual std::string describe() const = 0;
};

/// In-process lossless pipe: bytes written are returned by the next read.
class LoopbackLink final : public Link {
 public:
  void write(std::string_view bytes) override;
  std::vector<std::uint8_t> read_available() override;
  std::string describe() const override { return "loopback"; }

  std::uint64_t bytes_written() const { return written_; }

 private:
  std::vector<std::uint8_t> buffer_;
  std::uint64_t written_ = 0;
};

/// POSIX character device (serial port or pseudo-terminal). TTYs are put in
/// raw mode at 115200 baud, 8 data bits, no parity, 1 stop bit.
class SerialLink final : public Link {
 public:
  explicit SerialLink(const std::string& path);
  ~SerialLink() override;
  SerialLink(const SerialLink&) = delete;
  SerialLink& operator=(const SerialLink&) = delete;

  void write(std::string_view bytes) override;
  std::vector<std::uint8_t> read_available() override;
  std::string describe() const override { return path_; }

 private:
  std::string path_;
  int fd_ = -1;
};

/// "loopback" or a device path.
std::unique_ptr<Link> open_link(const std::string& endpoint);

}  // namespace theta::wire
