#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ltsi {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

/// A non-finite or out-of-domain value appeared during evaluation.
class NumericDomainError : public Error {
public:
    explicit NumericDomainError(const std::string& what,
                                std::optional<std::size_t> step = std::nullopt)
        : Error(step ? what + " (step " + std::to_string(*step) + ")" : what), step_(step) {}

    [[nodiscard]] std::optional<std::size_t> step() const noexcept { return step_; }

private:
    std::optional<std::size_t> step_;
};

/// Partition sums kept growing under refinement; the integrator is not of
/// bounded variation as far as the configured depth can tell.
class VariationUnboundedError : public Error {
public:
    using Error::Error;
};

/// The requested representation of the local time-space integral was not
/// declared on the integrand.
class RepresentationUnavailableError : public Error {
public:
    using Error::Error;
};

/// The requested accuracy or scale cannot be resolved on the given grid.
class ResolutionError : public Error {
public:
    using Error::Error;
};

}  // namespace ltsi
