#pragma once

namespace qsd {

inline constexpr const char* version = "0.1.0";

}
