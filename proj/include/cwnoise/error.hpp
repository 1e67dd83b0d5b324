// error.hpp: exception types shared by all modules

#pragma once

#include <stdexcept>
#include <string>

namespace cwnoise {

/// Bad input: violated preconditions, malformed files, inconsistent grids.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not produce a trustworthy result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The reconstruction protocol diverged.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

}  // namespace detail

}  // namespace cwnoise
