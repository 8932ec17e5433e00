#include "dean/core/error.hpp"

namespace dean {

std::string_view errorName(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyBlock: return "EmptyBlock";
        case ErrorCode::BadWeights: return "BadWeights";
        case ErrorCode::UnknownBlock: return "UnknownBlock";
        case ErrorCode::NoEligibleNode: return "NoEligibleNode";
        case ErrorCode::AlreadyLocked: return "AlreadyLocked";
        case ErrorCode::MissingParent: return "MissingParent";
        case ErrorCode::BadIdentity: return "BadIdentity";
        case ErrorCode::FailedChallenge: return "FailedChallenge";
        case ErrorCode::NoEligibleNeighbor: return "NoEligibleNeighbor";
        case ErrorCode::NotRelocation: return "NotRelocation";
        case ErrorCode::DuplicateSideBlock: return "DuplicateSideBlock";
        case ErrorCode::BadSourceHash: return "BadSourceHash";
        case ErrorCode::NoSpace: return "NoSpace";
        case ErrorCode::BadAck: return "BadAck";
        case ErrorCode::Unrecoverable: return "Unrecoverable";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::EventStorm: return "EventStorm";
        case ErrorCode::BadConfig: return "BadConfig";
        case ErrorCode::BadFormat: return "BadFormat";
    }
    return "Unknown";
}

}  // namespace dean
