#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rehearse {

enum class ErrorCode {
  // midi
  MalformedHeader,
  MalformedTrack,
  UnsupportedFormat,
  EmptyTempoMap,
  NonMonotoneTimestamps,
  // perf / eval
  EmptyPerformance,
  ZeroLengthReference,
  InvalidConfig,
  // haptic
  UnfingeredEvent,
  SongLongerThanSession,
  // glove
  CrcMismatch,
  TruncatedFrame,
  UnknownMsgType,
  PayloadTooLarge,
  CommitWithoutChunks,
  StartWithoutSchedule,
  MalformedSchedule,
  // analytics
  DuplicateSession,
  MissingEval,
  InvalidRecord,
  MissingTest,
  EmptyGroup,
  DegenerateGroups,
  StoreCorrupt,
  // study
  OddCount,
  MalformedTeam,
  AlreadyPeriod2,
  // api
  UnknownSong,
  NoDevice,
  DeviceBusy,
  SessionAlreadyActive,
  NoActiveSession,
  Unauthorized,
  Forbidden,
  BadRequest,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure surfaced by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  explicit Error(ErrorCode code) : std::runtime_error(std::string(to_string(code))), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rehearse
