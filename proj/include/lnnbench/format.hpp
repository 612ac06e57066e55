#pragma once

#include <array>
#include <charconv>
#include <string>

namespace lnnbench {

/// Shortest decimal form that round-trips to the same double. Used for
/// every value written to CSV so emitted files are byte-deterministic.
inline std::string format_double(double value) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  (void)ec;
  return std::string(buf.data(), ptr);
}

}  // namespace lnnbench
