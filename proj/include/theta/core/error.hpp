#pragma once

#include <stdexcept>
#include <string>

namespace theta {

// Base of every error raised by the library. The CLI maps subclasses onto
// process exit codes (see pipeline/commands.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RangeError : public Error { using Error::Error; };
class ArgumentError : public Error { using Error::Error; };
class ParseError : public Error { using Error::Error; };
class GeometryError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class StateError : public Error { using Error::Error; };
class LabelError : public Error { using Error::Error; };
class DataError : public Error { using Error::Error; };
class StreamError : public Error { using Error::Error; };
class SyncError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };

}  // namespace theta
