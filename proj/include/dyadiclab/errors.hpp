#pragma once
#include <stdexcept>
#include <string>

namespace dyadiclab {

struct RangeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct DepthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};
struct MembershipError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dyadiclab
