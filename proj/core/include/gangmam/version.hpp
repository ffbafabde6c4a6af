#pragma once

namespace gangmam {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace gangmam
