#pragma once

namespace langstep {

inline constexpr const char* kVersion = "langstep 0.1.0";
inline constexpr unsigned kDumpFormatVersion = 1;

}  // namespace langstep
