#pragma once

#include "json.hpp"

#include "rehearse/eval.hpp"
#include "rehearse/haptic.hpp"
#include "rehearse/midi.hpp"
#include "rehearse/perf.hpp"
#include "rehearse/session.hpp"

// JSON record schema shared by the store, the CLI and the HTTP API.

namespace rehearse::midi {
void to_json(nlohmann::json& j, const NoteEvent& ev);
void from_json(const nlohmann::json& j, NoteEvent& ev);
void to_json(nlohmann::json& j, const SongScore& song);
void from_json(const nlohmann::json& j, SongScore& song);
void to_json(nlohmann::json& j, const TimedMessage& msg);
void from_json(const nlohmann::json& j, TimedMessage& msg);
}  // namespace rehearse::midi

namespace rehearse::perf {
void to_json(nlohmann::json& j, const Token& token);
void from_json(const nlohmann::json& j, Token& token);
void to_json(nlohmann::json& j, const Performance& p);
void from_json(const nlohmann::json& j, Performance& p);
}  // namespace rehearse::perf

namespace rehearse::eval {
void to_json(nlohmann::json& j, const EvalConfig& c);
void from_json(const nlohmann::json& j, EvalConfig& c);
void to_json(nlohmann::json& j, const AlignOp& op);
void from_json(const nlohmann::json& j, AlignOp& op);
void to_json(nlohmann::json& j, const AlignmentResult& a);
void from_json(const nlohmann::json& j, AlignmentResult& a);
void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);
std::string_view to_string(OpKind kind);
}  // namespace rehearse::eval

namespace rehearse::analytics {
void to_json(nlohmann::json& j, const SessionRecord& r);
void from_json(const nlohmann::json& j, SessionRecord& r);
}  // namespace rehearse::analytics
