#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gnnspace {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid argument to an operation (bad generator parameters, bad rate, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

// Operation applied outside its domain (e.g. path length of a disconnected graph).
class DomainError : public Error {
public:
    using Error::Error;
};

// Tensor shape mismatch; message names the offending operands.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Iterative solver failed to converge; carries the last iterate.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, std::vector<double> last)
        : Error(msg), last_iterate(std::move(last)) {}
    std::vector<double> last_iterate;
};

// Malformed input file or identifier.
class ParseError : public Error {
public:
    using Error::Error;
};

// Training aborted (NaN loss); carries the epoch index.
class TrainingError : public Error {
public:
    TrainingError(const std::string& msg, int epoch_idx) : Error(msg), epoch(epoch_idx) {}
    int epoch;
};

// Metric or statistic undefined for the given inputs.
class UndefinedError : public Error {
public:
    using Error::Error;
};

// Results missing from an aggregation; message lists the gaps.
class AggregationError : public Error {
public:
    using Error::Error;
};

// Stored results disagree with the config that claims them.
class IntegrityError : public Error {
public:
    using Error::Error;
};

}  // namespace gnnspace
