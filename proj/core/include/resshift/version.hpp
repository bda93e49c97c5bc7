#pragma once

namespace resshift {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace resshift
