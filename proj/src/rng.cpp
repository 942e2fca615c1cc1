#include "dadpfl/rng.hpp"

namespace dadpfl {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t SeedTree::derive(std::string_view stream, std::uint64_t a, std::uint64_t b) const {
  // FNV-1a over the stream name, then mixed with the root and coordinates.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : stream) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  std::uint64_t s = splitmix64(root_ ^ h);
  s = splitmix64(s ^ splitmix64(a + 0x632BE59BD9B4E019ULL));
  s = splitmix64(s ^ splitmix64(b + 0x8CB92BA72F3D8DD7ULL));
  return s;
}

}  // namespace dadpfl
