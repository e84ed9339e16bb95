#pragma once

#include <string>

#include "cnndse/types.h"

namespace cnndse {

// Decimal units, 3 significant figures: 30,380,704 -> "30.4 MB".
std::string format_bytes(Count bytes);
// 2,266,838,155,264 -> "2.27 TF".
std::string format_flops(Count flops);
// Multiplier at 2 significant figures with an "x" suffix: "3.8x", "1x".
std::string format_multiplier(const Ratio& ratio);

}  // namespace cnndse
