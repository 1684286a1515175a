#pragma once

#include <stdexcept>

namespace switching {

/// A solver produced non-finite values or could not meet its convergence contract.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace switching
