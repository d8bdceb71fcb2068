#include "rehearse/error.hpp"

namespace rehearse {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MalformedTrack: return "MalformedTrack";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::EmptyTempoMap: return "EmptyTempoMap";
    case ErrorCode::NonMonotoneTimestamps: return "NonMonotoneTimestamps";
    case ErrorCode::EmptyPerformance: return "EmptyPerformance";
    case ErrorCode::ZeroLengthReference: return "ZeroLengthReference";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnfingeredEvent: return "UnfingeredEvent";
    case ErrorCode::SongLongerThanSession: return "SongLongerThanSession";
    case ErrorCode::CrcMismatch: return "CrcMismatch";
    case ErrorCode::TruncatedFrame: return "TruncatedFrame";
    case ErrorCode::UnknownMsgType: return "UnknownMsgType";
    case ErrorCode::PayloadTooLarge: return "PayloadTooLarge";
    case ErrorCode::CommitWithoutChunks: return "CommitWithoutChunks";
    case ErrorCode::StartWithoutSchedule: return "StartWithoutSchedule";
    case ErrorCode::MalformedSchedule: return "MalformedSchedule";
    case ErrorCode::DuplicateSession: return "DuplicateSession";
    case ErrorCode::MissingEval: return "MissingEval";
    case ErrorCode::InvalidRecord: return "InvalidRecord";
    case ErrorCode::MissingTest: return "MissingTest";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::DegenerateGroups: return "DegenerateGroups";
    case ErrorCode::StoreCorrupt: return "StoreCorrupt";
    case ErrorCode::OddCount: return "OddCount";
    case ErrorCode::MalformedTeam: return "MalformedTeam";
    case ErrorCode::AlreadyPeriod2: return "AlreadyPeriod2";
    case ErrorCode::UnknownSong: return "UnknownSong";
    case ErrorCode::NoDevice: return "NoDevice";
    case ErrorCode::DeviceBusy: return "DeviceBusy";
    case ErrorCode::SessionAlreadyActive: return "SessionAlreadyActive";
    case ErrorCode::NoActiveSession: return "NoActiveSession";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::Forbidden: return "Forbidden";
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace rehearse
