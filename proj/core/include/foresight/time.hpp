#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace foresight {

// UTC instant at second resolution.
using Instant = std::chrono::sys_seconds;

// Accepts "YYYY-MM-DDTHH:MM:SS[.fff](Z|+hh:mm|-hh:mm)"; 't', ' ' and 'z' are
// tolerated. Fractional seconds are truncated. Throws ParseError.
Instant parse_rfc3339(std::string_view text);

// Always "YYYY-MM-DDTHH:MM:SSZ".
std::string format_rfc3339(Instant t);

}  // namespace foresight
