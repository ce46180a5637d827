#pragma once

namespace rheat {

inline constexpr const char* kVersion = "0.1.0";

}
