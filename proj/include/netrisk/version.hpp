#pragma once

namespace netrisk {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace netrisk
