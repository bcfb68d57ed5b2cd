#pragma once

namespace wavelat {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace wavelat
