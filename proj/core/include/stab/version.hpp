#pragma once

namespace stab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace stab
