#pragma once

namespace chrelax {

inline constexpr const char* version = "0.1.0";

} // namespace chrelax
