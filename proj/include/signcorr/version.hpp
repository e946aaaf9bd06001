#pragma once

namespace signcorr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace signcorr
