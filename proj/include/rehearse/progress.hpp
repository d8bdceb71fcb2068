#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rehearse/session.hpp"

namespace rehearse::analytics {

/// Per-day learning deltas on normalized score (higher is better):
///   active  = score(post-test, day d) - score(pre-test, day d)
///   passive = score(pre-test, day d+1) - score(post-test, day d)
/// A negative passive delta is forgetting between sessions.
struct ProgressPoint {
  std::string participant_id;
  int day = 1;
  std::string song_ref;
  double pre_score = 0.0;
  double post_score = 0.0;
  double active_delta = 0.0;
  std::optional<double> passive_delta;
  GloveCondition condition = GloveCondition::none;
};

/// Throws MissingTest when either test is absent. `song` may be omitted when
/// the participant was tested on a single song that day.
double active_progress(const SessionStore& store, const std::string& participant, int day,
                       const std::optional<std::string>& song = std::nullopt);
double passive_retention(const SessionStore& store, const std::string& participant, int day,
                         const std::optional<std::string>& song = std::nullopt);

std::vector<ProgressPoint> progress_series(const SessionStore& store, const std::string& participant);

/// Glove condition in effect on a day, taken from that day's passive session.
GloveCondition day_condition(const SessionStore& store, const std::string& participant, int day);

enum class Metric { active_progress, passive_retention };
Metric parse_metric(std::string_view text);

/// One value per (participant, condition): the participant's mean of
/// `metric` over days under that condition.
std::map<GloveCondition, std::vector<double>> condition_groups(const SessionStore& store, Metric metric);

}  // namespace rehearse::analytics
