#pragma once

#include <stdexcept>
#include <string>

namespace steinbin {

// Two pmfs live on interleaved lattices where a common lattice is required.
class LatticeMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A sample is not within snapping tolerance of the requested lattice.
class OffLatticeError : public std::runtime_error {
 public:
  explicit OffLatticeError(double value)
      : std::runtime_error("sample " + std::to_string(value) + " is off the lattice"),
        value_(value) {}
  double value() const noexcept { return value_; }

 private:
  double value_;
};

// A theorem's hypotheses fail for the given input (sigma^2 <= 1, too few
// blocks, empty smoothness budget). The answer is "not applicable", not a bug.
class InapplicableError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace steinbin
