#include "fedsim/util.hpp"

#include <cstdio>
#include <cstdlib>

#include "fedsim/errors.hpp"

namespace fedsim {

std::string hex_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_hex_double(std::string_view s) {
  std::string owned(s);
  char* end = nullptr;
  double v = std::strtod(owned.c_str(), &end);
  if (end == owned.c_str()) {
    throw IoError("unparseable float value: '" + owned + "'");
  }
  return v;
}

std::string decimal17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed) {
  return fnv1a64(
      std::span<const unsigned char>(
          reinterpret_cast<const unsigned char*>(s.data()), s.size()),
      seed);
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace fedsim
