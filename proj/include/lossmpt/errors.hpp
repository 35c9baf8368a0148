#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lossmpt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An impedance with zero magnitude (or negative components) was used in a solve.
class DegenerateImpedance : public Error {
public:
    using Error::Error;
};

/// The two-bus discriminant is negative: no power flow solution exists.
class NoSolution : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of a closed-form expression.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The thermal limit does not intersect the upper voltage locus.
class LimitNotOnLocus : public Error {
public:
    enum class Reason {
        // |Z| I+ < |V+ - V0|: current limit binds before the voltage limit
        VoltageNotBinding,
        // |Z| I+ > V+ + V0: current limit cannot be reached on the voltage locus
        CurrentUnreachable,
    };

    LimitNotOnLocus(Reason reason, const std::string& what) : Error(what), reason_(reason) {}

    [[nodiscard]] Reason reason() const noexcept { return reason_; }

private:
    Reason reason_;
};

/// Iterative power flow did not converge.
class Diverged : public Error {
public:
    Diverged(const std::string& what, double last_change, int iterations)
        : Error(what), last_change_(last_change), iterations_(iterations) {}

    [[nodiscard]] double last_change() const noexcept { return last_change_; }
    [[nodiscard]] int iterations() const noexcept { return iterations_; }

private:
    double last_change_;
    int iterations_;
};

/// Feeder graph is not a tree rooted at a single source.
class TopologyError : public Error {
public:
    using Error::Error;
};

/// Nodal admittance system could not be factorised.
class IllConditioned : public Error {
public:
    using Error::Error;
};

/// A sweep produced no constraint-feasible operating point.
class NoFeasiblePoint : public Error {
public:
    using Error::Error;
};

/// Bus id not present in the model, or not valid for the query.
class InvalidBus : public Error {
public:
    using Error::Error;
};

/// Malformed feeder file.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line) : Error(what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace lossmpt
