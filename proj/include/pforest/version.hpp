#pragma once

namespace pforest {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pforest
