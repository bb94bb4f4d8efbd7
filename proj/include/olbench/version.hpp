#pragma once

namespace olbench {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace olbench
