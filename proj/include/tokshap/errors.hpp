#pragma once

#include <stdexcept>
#include <string>

namespace tokshap {

// Root of all library errors. kind() is a stable machine-readable tag used by
// the CLI for exit-code mapping and --json-errors output.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct EmptyPromptError : Error {
    explicit EmptyPromptError(const std::string& msg = "prompt has no units after splitting")
        : Error("EmptyPrompt", msg) {}
};

struct SplitterError : Error {
    explicit SplitterError(const std::string& msg) : Error("SplitterError", msg) {}
};

struct IndexOutOfRangeError : Error {
    explicit IndexOutOfRangeError(const std::string& msg) : Error("IndexOutOfRange", msg) {}
};

struct TooFewUnitsError : Error {
    explicit TooFewUnitsError(int n)
        : Error("TooFewUnits",
                "need at least 2 units to form proper non-empty subsets, got " + std::to_string(n)) {}
};

struct TooManyUnitsError : Error {
    explicit TooManyUnitsError(int n)
        : Error("TooManyUnits",
                "subset masks are limited to 63 units, got " + std::to_string(n)) {}
};

struct CapExceededError : Error {
    CapExceededError(int n, int cap)
        : Error("CapExceeded",
                "full enumeration of " + std::to_string(n) +
                    " units exceeds the cap of " + std::to_string(cap)),
          n_(n), cap_(cap) {}

    int n() const noexcept { return n_; }
    int cap() const noexcept { return cap_; }

private:
    int n_;
    int cap_;
};

struct PlanTooLargeError : Error {
    explicit PlanTooLargeError(const std::string& msg) : Error("PlanTooLarge", msg) {}
};

struct PlanMismatchError : Error {
    explicit PlanMismatchError(const std::string& msg) : Error("PlanMismatch", msg) {}
};

// Backend failures share a base class so callers can treat "the model is not
// answering" uniformly (CLI exit code 2).
struct BackendError : Error {
    BackendError(std::string kind, const std::string& msg) : Error(std::move(kind), msg) {}
};

struct BackendUnreachableError : BackendError {
    explicit BackendUnreachableError(const std::string& msg)
        : BackendError("BackendUnreachable", msg) {}
};

struct BackendRejectedError : BackendError {
    BackendRejectedError(int status, const std::string& body_excerpt)
        : BackendError("BackendRejected",
                       "backend returned HTTP " + std::to_string(status) + ": " + body_excerpt),
          status_(status) {}

    int status() const noexcept { return status_; }

private:
    int status_;
};

struct MalformedResponseError : BackendError {
    explicit MalformedResponseError(const std::string& msg)
        : BackendError("MalformedResponse", msg) {}
};

struct UnparseableBaselineError : Error {
    explicit UnparseableBaselineError(const std::string& msg)
        : Error("UnparseableBaseline", msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error("IoError", msg) {}
};

}  // namespace tokshap
