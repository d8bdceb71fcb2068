#include "rehearse/progress.hpp"

#include <set>

#include "rehearse/error.hpp"

namespace rehearse::analytics {

namespace {

const SessionRecord& pick_test(const std::vector<SessionRecord>& records, int day, SessionKind kind,
                               const std::optional<std::string>& song) {
  const SessionRecord* found = nullptr;
  for (const auto& r : records) {
    if (r.day != day || r.kind != kind || (song && r.song_ref != *song)) continue;
    if (found) throw Error(ErrorCode::BadRequest, "several songs tested that day; name the song");
    found = &r;
  }
  if (!found || !found->eval) {
    throw Error(ErrorCode::MissingTest, std::string(to_string(kind)) + " missing for day " + std::to_string(day));
  }
  return *found;
}

}  // namespace

double active_progress(const SessionStore& store, const std::string& participant, int day,
                       const std::optional<std::string>& song) {
  const auto records = store.for_participant(participant);
  const auto& pre = pick_test(records, day, SessionKind::pre_test, song);
  const auto& post = pick_test(records, day, SessionKind::post_test, pre.song_ref);
  return post.eval->score - pre.eval->score;
}

double passive_retention(const SessionStore& store, const std::string& participant, int day,
                         const std::optional<std::string>& song) {
  const auto records = store.for_participant(participant);
  const auto& post = pick_test(records, day, SessionKind::post_test, song);
  const auto& next_pre = pick_test(records, day + 1, SessionKind::pre_test, post.song_ref);
  return next_pre.eval->score - post.eval->score;
}

GloveCondition day_condition(const SessionStore& store, const std::string& participant, int day) {
  GloveCondition fallback = GloveCondition::none;
  for (const auto& r : store.for_participant(participant)) {
    if (r.day != day || r.glove_condition == GloveCondition::none) continue;
    if (r.kind == SessionKind::passive) return r.glove_condition;
    fallback = r.glove_condition;
  }
  return fallback;
}

std::vector<ProgressPoint> progress_series(const SessionStore& store, const std::string& participant) {
  const auto records = store.for_participant(participant);
  std::set<std::pair<int, std::string>> days;
  for (const auto& r : records) {
    if (r.kind == SessionKind::pre_test) days.emplace(r.day, r.song_ref);
  }
  std::vector<ProgressPoint> out;
  for (const auto& [day, song] : days) {
    const auto pre = store.find(participant, day, SessionKind::pre_test, song);
    const auto post = store.find(participant, day, SessionKind::post_test, song);
    if (!pre || !post || !pre->eval || !post->eval) continue;
    ProgressPoint p;
    p.participant_id = participant;
    p.day = day;
    p.song_ref = song;
    p.pre_score = pre->eval->score;
    p.post_score = post->eval->score;
    p.active_delta = p.post_score - p.pre_score;
    if (const auto next = store.find(participant, day + 1, SessionKind::pre_test, song); next && next->eval) {
      p.passive_delta = next->eval->score - p.post_score;
    }
    p.condition = day_condition(store, participant, day);
    out.push_back(p);
  }
  return out;
}

Metric parse_metric(std::string_view text) {
  if (text == "active_progress") return Metric::active_progress;
  if (text == "passive_retention") return Metric::passive_retention;
  throw Error(ErrorCode::BadRequest, "unknown metric '" + std::string(text) + "'");
}

std::map<GloveCondition, std::vector<double>> condition_groups(const SessionStore& store, Metric metric) {
  std::map<GloveCondition, std::vector<double>> groups;
  for (const auto& participant : store.participants()) {
    std::map<GloveCondition, std::pair<double, int>> sums;
    for (const auto& p : progress_series(store, participant)) {
      if (p.condition == GloveCondition::none) continue;
      std::optional<double> v = metric == Metric::active_progress ? std::optional<double>(p.active_delta) : p.passive_delta;
      if (!v) continue;
      auto& [sum, n] = sums[p.condition];
      sum += *v;
      ++n;
    }
    for (const auto& [cond, acc] : sums) groups[cond].push_back(acc.first / acc.second);
  }
  return groups;
}

}  // namespace rehearse::analytics
