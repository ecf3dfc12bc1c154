#pragma once

#include <stdexcept>
#include <string>

namespace picardkit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes do not agree, or an index/count is out of range.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A documented precondition on the input was violated.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Cholesky met a non-positive pivot.
class NotSpdError : public Error {
public:
    using Error::Error;
};

/// The data cannot be whitened (rank-deficient covariance, zero rows of WA, ...).
class DegenerateDataError : public Error {
public:
    using Error::Error;
};

/// The unmixing matrix is singular.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf showed up during an optimization run.
class NumericalFailure : public Error {
public:
    NumericalFailure(const std::string& what, std::size_t iteration)
        : Error(what), iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

/// A diagnostic refused to materialize an operator larger than its size guard.
class SizeGuardError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents. Carries a 1-based location when known.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Well-formed file whose layout disagrees with its header.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace picardkit
