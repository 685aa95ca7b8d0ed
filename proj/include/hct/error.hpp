#pragma once

#include <stdexcept>
#include <string>

namespace hct {

// Invalid structure (bad rank wiring, malformed encoding, broken path, ...).
class structure_error : public std::runtime_error {
 public:
  explicit structure_error(const std::string& what) : std::runtime_error(what) {}
};

// Shapes or tensor lengths do not line up.
class shape_error : public std::runtime_error {
 public:
  explicit shape_error(const std::string& what) : std::runtime_error(what) {}
};

// A precondition on the algebra (distributivity, associativity, arity) fails.
class algebra_error : public std::runtime_error {
 public:
  explicit algebra_error(const std::string& what) : std::runtime_error(what) {}
};

// Random search exhausted its retry budget.
class sampling_error : public std::runtime_error {
 public:
  explicit sampling_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hct
