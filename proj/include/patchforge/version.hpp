#pragma once

namespace pf {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pf
