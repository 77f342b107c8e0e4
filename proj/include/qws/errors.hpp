#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qws {

// Base of the toolkit's error hierarchy. Subclasses map onto CLI exit codes:
// usage/parameter problems -> 2, verification failures -> 1, capacity -> 3.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad argument to a constructor or operation (wrong range, wrong dimension).
class InvalidParameterError : public Error {
public:
    using Error::Error;
};

// Scalar argument outside the mathematical domain of a formula.
class DomainError : public Error {
public:
    using Error::Error;
};

// Chain is not ergodic (reducible or periodic). Carries the strongly
// connected components of the positive-entry digraph when available.
class ErgodicityError : public Error {
public:
    explicit ErgodicityError(const std::string& what,
                             std::vector<std::vector<int>> components = {})
        : Error(what), components_(std::move(components)) {}

    const std::vector<std::vector<int>>& components() const { return components_; }

private:
    std::vector<std::vector<int>> components_;
};

// Detailed balance fails where a reversible chain is required.
class ReversibilityError : public Error {
public:
    using Error::Error;
};

// A matrix that must be invertible is numerically singular.
class SingularityError : public Error {
public:
    using Error::Error;
};

// Requested instance exceeds the dense simulation limits.
class CapacityError : public Error {
public:
    using Error::Error;
};

// Circuit left residual entanglement on ancillas, or an induced map
// disagrees with its contract.
class CircuitError : public Error {
public:
    using Error::Error;
};

// A numeric verification report exceeded its tolerance.
class VerificationError : public Error {
public:
    using Error::Error;
};

} // namespace qws
