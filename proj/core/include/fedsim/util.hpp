#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace fedsim {

/// Encodes a double as a C99 hex-float string ("0x1.91eb851eb851fp-1").
/// Bit-exact round trip through parse_hex_double; used wherever 64-bit
/// values must survive JSON persistence unchanged.
std::string hex_double(double v);

/// Parses a hex-float (or plain decimal) string back to a double.
double parse_hex_double(std::string_view s);

/// Formats with %.17g — the shortest decimal form guaranteed to round-trip
/// IEEE binary64. Used for CSV cells.
std::string decimal17(double v);

/// FNV-1a 64-bit over a byte range. Stable across platforms; used for
/// schema hashes and trajectory digests.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(std::string_view s,
                      std::uint64_t seed = 0xcbf29ce484222325ull);

/// 16-char lowercase hex rendering of a 64-bit value.
std::string hex64(std::uint64_t v);

}  // namespace fedsim
