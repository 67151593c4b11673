#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace seqstrat {

// Domain error. The CLI maps these to exit code 1 with a structured record
// on stderr; everything else (bad flags) is a usage error.
class error : public std::runtime_error {
public:
  explicit error(std::string message) : std::runtime_error(std::move(message)) {}
};

namespace detail {
inline void format_into(std::ostringstream&) {}

template <typename T, typename... Rest>
void format_into(std::ostringstream& out, const T& head, const Rest&... rest) {
  out << head;
  format_into(out, rest...);
}
} // namespace detail

template <typename... Args>
[[noreturn]] void fail(const Args&... args) {
  std::ostringstream out;
  detail::format_into(out, args...);
  throw error(out.str());
}

template <typename... Args>
void require(bool condition, const Args&... args) {
  if (!condition) fail(args...);
}

} // namespace seqstrat
