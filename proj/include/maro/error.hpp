#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maro {

enum class Errc {
    // data
    MissingField,
    BadLabel,
    DuplicateId,
    EmptyFile,
    EmptyDataset,
    BadRecord,
    // provider
    Timeout,
    Upstream4xx,
    Upstream5xx,
    NotScripted,
    Transport,
    // analysis
    NoComments,
    UnparsableQuestions,
    NoSections,
    AllSectionsFailed,
    // evidence
    AllQueriesFailed,
    // tasks
    SingleDomain,
    MissingReport,
    NotEnoughDemos,
    // judge
    EmptyTaskSet,
    NoUsableVerdicts,
    // optimizer
    EmptyLedger,
    EmptyProposal,
    CorruptCheckpoint,
    // eval
    LengthMismatch,
    Empty,
    CrossDomainLeak,
    // config / io
    BadConfig,
    Io,
};

std::string_view errc_name(Errc code) noexcept;

/// Broad class of an error, used for CLI exit codes.
enum class ErrorClass { Data, Provider, Usage };

ErrorClass errc_class(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

    bool retryable() const noexcept {
        return code_ == Errc::Upstream5xx || code_ == Errc::Timeout || code_ == Errc::Transport;
    }

private:
    Errc code_;
};

}  // namespace maro
