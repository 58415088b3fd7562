#pragma once

#include <string_view>

namespace biopepad {

inline constexpr std::string_view kToolName = "biopepad";
inline constexpr std::string_view kToolVersion = "0.1.0";

}  // namespace biopepad
