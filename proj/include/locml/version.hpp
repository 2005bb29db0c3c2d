#pragma once

namespace locml {

inline constexpr const char* version = "0.1.0";

}  // namespace locml
