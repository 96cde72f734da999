#pragma once

namespace mse {

inline constexpr const char* version = "1.0.0";

}
