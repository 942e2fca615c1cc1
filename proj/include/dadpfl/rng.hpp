#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dadpfl {

using Rng = std::mt19937_64;

// Named sub-streams derived from one root seed. Each stream is keyed by a
// name plus up to two integer coordinates (round, client), so changing how
// one stream is consumed never shifts the draws of another.
class SeedTree {
 public:
  explicit SeedTree(std::uint64_t root) : root_(root) {}

  std::uint64_t root() const { return root_; }

  std::uint64_t derive(std::string_view stream, std::uint64_t a = 0, std::uint64_t b = 0) const;
  Rng stream(std::string_view name, std::uint64_t a = 0, std::uint64_t b = 0) const {
    return Rng(derive(name, a, b));
  }

 private:
  std::uint64_t root_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace dadpfl
