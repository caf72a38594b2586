#include "theta/wire/link.hpp"

#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <termios.h>
#include <unistd.h>

#include "theta/core/error.hpp"

namespace theta::wire {

void LoopbackLink::write(std::string_view bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
  written_ += bytes.size();
}

std::vector<std::uint8_t> LoopbackLink::read_available() {
  std::vector<std::uint8_t> out;
  out.swap(buffer_);
  return out;
}

SerialLink::SerialLink(const std::string& path) : path_(path) {
  fd_ = ::open(path.c_str(), O_RDWR | O_NOCTTY | O_NONBLOCK);
  if (fd_ < 0) throw IoError("cannot open serial endpoint " + path + ": " + std::strerror(errno));
  if (::isatty(fd_)) {
    termios tio{};
    if (::tcgetattr(fd_, &tio) != 0) {
      ::close(fd_);
      throw IoError("tcgetattr failed on " + path);
    }
    ::cfmakeraw(&tio);
    tio.c_cflag &= ~static_cast<tcflag_t>(CSIZE | PARENB | CSTOPB | CRTSCTS);
    tio.c_cflag |= CS8 | CLOCAL | CREAD;
    ::cfsetispeed(&tio, B115200);
    ::cfsetospeed(&tio, B115200);
    if (::tcsetattr(fd_, TCSANOW, &tio) != 0) {
      ::close(fd_);
      throw IoError("tcsetattr failed on " + path);
    }
  }
}

SerialLink::~SerialLink() {
  if (fd_ >= 0) ::close(fd_);
}

void SerialLink::write(std::string_view bytes) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::write(fd_, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN) {
        ::usleep(200);
        continue;
      }
      throw IoError("write to " + path_ + " failed: " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

std::vector<std::uint8_t> SerialLink::read_available() {
  std::vector<std::uint8_t> out;
  std::uint8_t buf[256];
  for (;;) {
    const ssize_t n = ::read(fd_, buf, sizeof buf);
    if (n > 0) {
      out.insert(out.end(), buf, buf + n);
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    break;
  }
  return out;
}

std::unique_ptr<Link> open_link(const std::string& endpoint) {
  if (endpoint.empty() || endpoint == "loopback") return std::make_unique<LoopbackLink>();
  return std::make_unique<SerialLink>(endpoint);
}

}  // namespace theta::wire
