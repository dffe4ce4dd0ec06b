#pragma once

#include <stdexcept>
#include <string>

namespace pinvgcn {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A node has degree zero (violates the connectivity assumption).
struct IsolatedNodeError : Error {
    using Error::Error;
};

/// A graph that must be connected is not.
struct DisconnectedGraphError : Error {
    using Error::Error;
};

/// The recovered eigengap is below tolerance; the graph is disconnected
/// to working precision.
struct NumericallyDisconnectedError : Error {
    using Error::Error;
};

/// Eigensolver ran out of restarts before reaching the residual tolerance.
struct NoConvergenceError : Error {
    NoConvergenceError(const std::string& msg, double achieved)
        : Error(msg), achieved_residual(achieved) {}
    double achieved_residual;
};

/// Requested rank exceeds what the operator can provide.
struct RankTooLargeError : Error {
    using Error::Error;
};

/// The normalized incidence does not have enough numerical rank.
struct RankDeficientError : Error {
    using Error::Error;
};

/// Hypergraph construction dropped every hyperedge.
struct EmptyHypergraphError : Error {
    using Error::Error;
};

/// Malformed input file; message carries path and line number.
struct ParseError : Error {
    using Error::Error;
};

/// Training loss became non-finite; message carries the epoch index.
struct NonFiniteLossError : Error {
    NonFiniteLossError(const std::string& msg, int at_epoch)
        : Error(msg), epoch(at_epoch) {}
    int epoch;
};

/// Operand shapes do not conform.
struct DimensionError : Error {
    using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

inline void require_dims(bool cond, const std::string& msg) {
    if (!cond) throw DimensionError(msg);
}

} // namespace pinvgcn
