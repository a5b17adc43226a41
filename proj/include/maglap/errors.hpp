#pragma once

#include <stdexcept>
#include <string>

namespace maglap {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: graph files, configs, out-of-domain parameters.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Δ + qI (or a factor of it) is singular.
class SingularSystem : public Error {
public:
    using Error::Error;
};

/// Exact-mode cycle popping met a cycle with acceptance probability above one.
class StrongInconsistency : public Error {
public:
    using Error::Error;
};

/// A random walk exceeded its step budget.
class StepBudgetExceeded : public Error {
public:
    using Error::Error;
};

/// An iterative method failed to reach its tolerance.
class NonConvergence : public Error {
public:
    using Error::Error;
};

} // namespace maglap
