#pragma once

namespace mfpmp {

inline constexpr const char* kToolName = "mfpmp";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace mfpmp
