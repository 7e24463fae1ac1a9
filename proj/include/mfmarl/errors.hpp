#pragma once

#include <stdexcept>
#include <string>

namespace mfmarl {

// Bad arguments: out-of-range indices, dimension mismatches, invalid
// distributions.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The approximation bound's hypothesis gamma * S_P < 1 does not hold.
class BoundInapplicableError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A bound computation was requested for a reward that is not affine in the
// mean-field arguments.
class AffineRequiredError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A non-finite value appeared while training.
class TrainingDivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Relative error is undefined because the reference value is ~0.
class DivisionGuardError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace mfmarl
