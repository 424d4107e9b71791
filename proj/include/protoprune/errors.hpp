#pragma once

#include <stdexcept>
#include <string>

namespace protoprune {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Vector with (near-)zero norm fed to a sphere projection.
struct ZeroVectorError : Error {
    explicit ZeroVectorError(const std::string& what) : Error(what) {}
};

// Operands with incompatible dimensions.
struct DimensionMismatchError : Error {
    explicit DimensionMismatchError(const std::string& what) : Error(what) {}
};

// Class index outside [0, C).
struct BadLabelError : Error {
    explicit BadLabelError(const std::string& what) : Error(what) {}
};

// Operation needs at least two classes.
struct SingleClassError : Error {
    explicit SingleClassError(const std::string& what) : Error(what) {}
};

// Operation called in the wrong supervision mode.
struct ModeError : Error {
    explicit ModeError(const std::string& what) : Error(what) {}
};

// Requested draw larger than the pool it samples from.
struct BudgetExceedsPoolError : Error {
    explicit BudgetExceedsPoolError(const std::string& what) : Error(what) {}
};

// Malformed dataset file; message carries file and line number.
struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error(what) {}
};

// Node-to-graph assignment is not monotone in a graph indicator file.
struct InconsistentIndicatorError : Error {
    explicit InconsistentIndicatorError(const std::string& what) : Error(what) {}
};

// Graph with zero nodes fed to the encoder.
struct EmptyGraphError : Error {
    explicit EmptyGraphError(const std::string& what) : Error(what) {}
};

// Resampling would leave a class with no samples.
struct EmptyClassError : Error {
    explicit EmptyClassError(const std::string& what) : Error(what) {}
};

// Invalid run configuration.
struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace protoprune
