#pragma once

#include <stdexcept>
#include <string>

namespace benchkit {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A caller violated a documented precondition.
struct PreconditionError : Error {
    using Error::Error;
};

// Input file / stream could not be read or parsed at the record level.
struct IngestError : Error {
    using Error::Error;
};

// Network or HTTP failure that survived the retry budget.
struct TransportError : Error {
    using Error::Error;
};

// The provider answered but refused or returned an unusable body.
struct ContentError : Error {
    using Error::Error;
};

// No parseable criteria array in an annotator response. Carries the raw
// response for audit.
struct AnnotationParseError : Error {
    AnnotationParseError(const std::string& what, std::string raw)
        : Error(what), raw_response(std::move(raw)) {}
    std::string raw_response;
};

// No verdict label in a judge response. Carries the raw judgment for audit.
struct VerdictParseError : Error {
    VerdictParseError(const std::string& what, std::string raw)
        : Error(what), raw_judgment(std::move(raw)) {}
    std::string raw_judgment;
};

// Optimizer failed to reach the gradient tolerance within the iteration cap.
struct ConvergenceError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace benchkit
