#pragma once

namespace fairbni {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fairbni
