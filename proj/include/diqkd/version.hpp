#pragma once

namespace diqkd {

inline constexpr const char* kToolName = "diqkd";
inline constexpr const char* kToolVersion = "0.1.0";

} // namespace diqkd
