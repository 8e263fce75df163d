#pragma once

namespace mammoeval {

inline constexpr const char* kVersion = "0.1.0";

} // namespace mammoeval
