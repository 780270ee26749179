#pragma once

namespace emod {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace emod
