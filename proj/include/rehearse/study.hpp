#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace rehearse::study {

enum class Song { A, B };
enum class Glove { functional, sham };

/// Schedule defaults: two crossover periods of two weeks, 30 min active and
/// 150 min passive practice per day.
struct StudyConfig {
  int periods = 2;
  int period_days = 14;
  double active_minutes = 30.0;
  double passive_minutes = 150.0;
};

using Pair = std::pair<std::string, std::string>;

struct Team {
  std::string id;
  std::vector<Pair> pairs;  // four skill-matched pairs
};

inline constexpr std::size_t kTeamSize = 8;

struct ConditionAssignment {
  std::string participant_id;
  std::string team_id;
  int period = 1;
  Song song = Song::A;
  Glove glove = Glove::functional;

  friend bool operator==(const ConditionAssignment&, const ConditionAssignment&) = default;
};

/// What a participant may see: no glove condition.
struct BlindedAssignment {
  std::string participant_id;
  std::string team_id;
  int period = 1;
  Song song = Song::A;
};

/// Sorts by improvement (ties by id) and pairs neighbours.
std::vector<Pair> pair_participants(const std::map<std::string, double>& pretest_improvements);

/// Throws MalformedTeam unless the team has four pairs of eight distinct ids.
void validate_team(const Team& team);

/// Period-1 cells (song x glove) get two participants each; partners share a
/// song and get opposite gloves. Period 2 follows by crossover. Returns both
/// periods, period 1 first, in team pair order.
std::vector<ConditionAssignment> assign_latin_square(const Team& team, std::uint64_t seed);

/// Flips song and glove for period 2. Throws AlreadyPeriod2.
ConditionAssignment crossover(const ConditionAssignment& period1);

std::vector<BlindedAssignment> blind(const std::vector<ConditionAssignment>& assignments);

enum class Role { participant, analyst };

/// Full assignment table. Throws Forbidden for anyone but an analyst.
const std::vector<ConditionAssignment>& unblind(const std::vector<ConditionAssignment>& assignments, Role role);

std::string_view to_string(Song song);
std::string_view to_string(Glove glove);

void to_json(nlohmann::json& j, const Team& team);
void from_json(const nlohmann::json& j, Team& team);
void to_json(nlohmann::json& j, const ConditionAssignment& a);
void from_json(const nlohmann::json& j, ConditionAssignment& a);
void to_json(nlohmann::json& j, const BlindedAssignment& a);

}  // namespace rehearse::study
