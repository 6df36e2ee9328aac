#pragma once

namespace lanesim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lanesim
