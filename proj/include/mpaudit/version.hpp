#pragma once

namespace mpaudit {

inline constexpr const char* kToolkitVersion = "1.0.0";

}  // namespace mpaudit
