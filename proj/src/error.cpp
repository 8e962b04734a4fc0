#include "maro/error.hpp"

namespace maro {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::MissingField: return "MissingField";
        case Errc::BadLabel: return "BadLabel";
        case Errc::DuplicateId: return "DuplicateId";
        case Errc::EmptyFile: return "EmptyFile";
        case Errc::EmptyDataset: return "EmptyDataset";
        case Errc::BadRecord: return "BadRecord";
        case Errc::Timeout: return "Timeout";
        case Errc::Upstream4xx: return "Upstream4xx";
        case Errc::Upstream5xx: return "Upstream5xx";
        case Errc::NotScripted: return "NotScripted";
        case Errc::Transport: return "Transport";
        case Errc::NoComments: return "NoComments";
        case Errc::UnparsableQuestions: return "UnparsableQuestions";
        case Errc::NoSections: return "NoSections";
        case Errc::AllSectionsFailed: return "AllSectionsFailed";
        case Errc::AllQueriesFailed: return "AllQueriesFailed";
        case Errc::SingleDomain: return "SingleDomain";
        case Errc::MissingReport: return "MissingReport";
        case Errc::NotEnoughDemos: return "NotEnoughDemos";
        case Errc::EmptyTaskSet: return "EmptyTaskSet";
        case Errc::NoUsableVerdicts: return "NoUsableVerdicts";
        case Errc::EmptyLedger: return "EmptyLedger";
        case Errc::EmptyProposal: return "EmptyProposal";
        case Errc::CorruptCheckpoint: return "CorruptCheckpoint";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::Empty: return "Empty";
        case Errc::CrossDomainLeak: return "CrossDomainLeak";
        case Errc::BadConfig: return "BadConfig";
        case Errc::Io: return "Io";
    }
    return "Unknown";
}

ErrorClass errc_class(Errc code) noexcept {
    switch (code) {
        case Errc::Timeout:
        case Errc::Upstream4xx:
        case Errc::Upstream5xx:
        case Errc::NotScripted:
        case Errc::Transport:
            return ErrorClass::Provider;
        case Errc::BadConfig:
            return ErrorClass::Usage;
        default:
            return ErrorClass::Data;
    }
}

}  // namespace maro
