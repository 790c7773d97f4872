#pragma once

namespace hbi {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hbi
