#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bestofk {

/// Zero-based arm index.
using Arm = std::uint32_t;

/// A set of arms. Kept sorted ascending unless a function says otherwise.
using ArmSet = std::vector<Arm>;

/// A caller-supplied argument violates an operation's precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested configuration cannot be realised (e.g. a top-off or
/// balancing set that is larger than the pool it is drawn from, or a joint
/// table with a negative atom).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An enumeration would exceed a configured size cap.
class SizeCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bandit feedback cannot separate arms because some arm has mean one.
class IdentifiabilityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

std::string format_set(const ArmSet& set);

}  // namespace bestofk
