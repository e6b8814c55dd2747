#pragma once

namespace gridinertia {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gridinertia
