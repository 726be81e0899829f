#pragma once

namespace lgt {
inline constexpr const char* kVersion = "0.1.0";
}
