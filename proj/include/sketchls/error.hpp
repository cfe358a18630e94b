#ifndef SKETCHLS_ERROR_HPP
#define SKETCHLS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace sketchls {

enum class ErrorCode {
  invalid_input = 1,
  numeric = 2,
  io = 3,
};

/// Single exception type for the library. The C API maps `code()` onto its
/// status values.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_invalid(const std::string& what) {
  throw Error(ErrorCode::invalid_input, what);
}

[[noreturn]] inline void throw_numeric(const std::string& what) {
  throw Error(ErrorCode::numeric, what);
}

[[noreturn]] inline void throw_io(const std::string& what) {
  throw Error(ErrorCode::io, what);
}

} // namespace sketchls

#endif
