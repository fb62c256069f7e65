#pragma once

namespace dpl {
inline constexpr const char* kVersion = "0.1.0";
}
