#pragma once

namespace ldmatrix {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ldmatrix
