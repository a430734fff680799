#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dfsos {

enum class ErrorKind {
    InvalidArgument,
    ShapeMismatch,
    EmptyClass,
    LabelOutOfRange,
    NonFiniteEncountered,
    DegenerateDirection,
    SingularSystem,
    RankCollapse,
    FactorizationFailure,
    SpecInvalid,
    RaggedRows,
    NonNumericField,
    UnknownLabel,
    TooFewSamples,
    AllCellsFailed,
    ZeroVector,
    IoError,
};

std::string_view to_string(ErrorKind kind);

// Broad grouping used by the command line to pick an exit code.
enum class ErrorClass { Usage, Data, Numerical };

ErrorClass classify_error(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace dfsos
