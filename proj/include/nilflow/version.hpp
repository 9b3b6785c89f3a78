#pragma once

namespace nilflow {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nilflow
