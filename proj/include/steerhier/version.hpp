#pragma once

namespace steerhier {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace steerhier
