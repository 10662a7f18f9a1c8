#pragma once
#include <stdexcept>
#include <string>

namespace pdeabcd {

// Requested object would exceed a memory or size guard.
class SizeError : public std::length_error {
public:
    using std::length_error::length_error;
};

// Input outside the domain of an operation (non-nested meshes, box violations, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Factorization or solve failed numerically.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-positive pivot while factorizing a matrix assumed SPD.
class DefinitenessError : public NumericError {
public:
    using NumericError::NumericError;
};

} // namespace pdeabcd
