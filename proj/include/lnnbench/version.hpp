#pragma once

namespace lnnbench {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace lnnbench
