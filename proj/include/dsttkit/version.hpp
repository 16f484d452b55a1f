#pragma once

namespace dstt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dstt
