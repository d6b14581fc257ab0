#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace vdlab {

/// Number of Unicode scalars in a UTF-8 string (continuation bytes are not
/// counted). This is the "length" used by the length filter and the bucket
/// statistics; for ASCII it equals the byte count.
std::size_t utf8_length(std::string_view s);

/// True if s is well-formed UTF-8.
bool utf8_valid(std::string_view s);

/// Replaces every ill-formed byte sequence with U+FFFD. Well-formed input is
/// returned unchanged.
std::string sanitize_utf8(std::string_view s);

}  // namespace vdlab
