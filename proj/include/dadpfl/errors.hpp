#pragma once

#include <stdexcept>
#include <string>

namespace dadpfl {

class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input for which the requested quantity is mathematically undefined
// (e.g. the PQ index of a zero vector).
class UndefinedInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InfeasiblePartition : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dadpfl
