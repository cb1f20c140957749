#pragma once

namespace psmatch {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace psmatch
