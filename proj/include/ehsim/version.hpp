#pragma once

namespace ehsim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ehsim
