#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace impactkit {

/// Base class for all toolkit errors. `kind()` is a stable machine-readable
/// tag used by the CLI error protocol; `what()` carries the human message.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define IMPACTKIT_DEFINE_ERROR(NAME, KIND)                       \
    class NAME : public Error {                                  \
    public:                                                      \
        explicit NAME(const std::string& message)                \
            : Error(KIND, message) {}                            \
    }

// Precondition violations.
IMPACTKIT_DEFINE_ERROR(InvalidArgumentError, "InvalidArgument");

// core_metrics
IMPACTKIT_DEFINE_ERROR(EmptyCohortError, "EmptyCohort");
IMPACTKIT_DEFINE_ERROR(DegenerateCohortError, "DegenerateCohort");

// ranking_eval
IMPACTKIT_DEFINE_ERROR(EmptyInputError, "EmptyInput");

// scholar_gateway
IMPACTKIT_DEFINE_ERROR(RateLimitedError, "RateLimited");
IMPACTKIT_DEFINE_ERROR(TransportError, "Transport");
IMPACTKIT_DEFINE_ERROR(MalformedResponseError, "MalformedResponse");
IMPACTKIT_DEFINE_ERROR(NotFoundError, "NotFound");

// keyphrase / chat gateway
IMPACTKIT_DEFINE_ERROR(MissingPlaceholderError, "MissingPlaceholder");
IMPACTKIT_DEFINE_ERROR(GatewayError, "GatewayError");
IMPACTKIT_DEFINE_ERROR(EmptyResponseError, "EmptyResponse");

// dataset_builder
IMPACTKIT_DEFINE_ERROR(AllFailedError, "AllFailed");
IMPACTKIT_DEFINE_ERROR(TooFewExamplesError, "TooFewExamples");
IMPACTKIT_DEFINE_ERROR(IoError, "IoError");
IMPACTKIT_DEFINE_ERROR(SchemaViolationError, "SchemaViolation");

// predictor
IMPACTKIT_DEFINE_ERROR(ExtrasIncompleteError, "ExtrasIncomplete");
IMPACTKIT_DEFINE_ERROR(UnparseableError, "Unparseable");
IMPACTKIT_DEFINE_ERROR(ShapeMismatchError, "ShapeMismatch");
IMPACTKIT_DEFINE_ERROR(NonFiniteLossError, "NonFiniteLoss");

// cli_reports
IMPACTKIT_DEFINE_ERROR(EmptyGroupError, "EmptyGroup");

#undef IMPACTKIT_DEFINE_ERROR

}  // namespace impactkit
