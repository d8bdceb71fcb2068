#include "rehearse/study.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "rehearse/error.hpp"
#include "rehearse/rng.hpp"

namespace rehearse::study {

std::vector<Pair> pair_participants(const std::map<std::string, double>& pretest_improvements) {
  if (pretest_improvements.size() % 2 != 0) {
    throw Error(ErrorCode::OddCount, std::to_string(pretest_improvements.size()) + " participants cannot be paired");
  }
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& [id, improvement] : pretest_improvements) ranked.emplace_back(improvement, id);
  std::sort(ranked.begin(), ranked.end());
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i + 1 < ranked.size(); i += 2) pairs.emplace_back(ranked[i].second, ranked[i + 1].second);
  return pairs;
}

void validate_team(const Team& team) {
  if (team.pairs.size() * 2 != kTeamSize) throw Error(ErrorCode::MalformedTeam, "a team has four pairs");
  std::set<std::string> ids;
  for (const auto& [a, b] : team.pairs) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::MalformedTeam, "empty participant id");
    ids.insert(a);
    ids.insert(b);
  }
  if (ids.size() != kTeamSize) throw Error(ErrorCode::MalformedTeam, "participant ids must be distinct");
}

ConditionAssignment crossover(const ConditionAssignment& period1) {
  if (period1.period != 1) throw Error(ErrorCode::AlreadyPeriod2, "no period after 2");
  ConditionAssignment next = period1;
  next.period = 2;
  next.song = period1.song == Song::A ? Song::B : Song::A;
  next.glove = period1.glove == Glove::functional ? Glove::sham : Glove::functional;
  return next;
}

std::vector<ConditionAssignment> assign_latin_square(const Team& team, std::uint64_t seed) {
  validate_team(team);
  std::mt19937_64 eng(splitmix64(seed));

  std::vector<std::size_t> order(team.pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(eng, std::span<std::size_t>(order));

  // First half of the shuffled pairs start on song A, the rest on B.
  std::vector<Song> pair_song(team.pairs.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    pair_song[order[rank]] = rank < order.size() / 2 ? Song::A : Song::B;
  }

  std::vector<ConditionAssignment> period1;
  for (std::size_t i = 0; i < team.pairs.size(); ++i) {
    const bool first_functional = uniform_below(eng, 2) == 0;
    const auto& [a, b] = team.pairs[i];
    period1.push_back({a, team.id, 1, pair_song[i], first_functional ? Glove::functional : Glove::sham});
    period1.push_back({b, team.id, 1, pair_song[i], first_functional ? Glove::sham : Glove::functional});
  }
  std::vector<ConditionAssignment> out = period1;
  for (const auto& a : period1) out.push_back(crossover(a));
  return out;
}

std::vector<BlindedAssignment> blind(const std::vector<ConditionAssignment>& assignments) {
  std::vector<BlindedAssignment> out;
  out.reserve(assignments.size());
  for (const auto& a : assignments) out.push_back({a.participant_id, a.team_id, a.period, a.song});
  return out;
}

const std::vector<ConditionAssignment>& unblind(const std::vector<ConditionAssignment>& assignments, Role role) {
  if (role != Role::analyst) throw Error(ErrorCode::Forbidden, "glove conditions are analyst-only");
  return assignments;
}

std::string_view to_string(Song song) { return song == Song::A ? "A" : "B"; }
std::string_view to_string(Glove glove) { return glove == Glove::functional ? "functional" : "sham"; }

void to_json(nlohmann::json& j, const Team& team) {
  j = nlohmann::json{{"team_id", team.id}, {"pairs", nlohmann::json::array()}};
  for (const auto& [a, b] : team.pairs) j["pairs"].push_back({a, b});
}

void from_json(const nlohmann::json& j, Team& team) {
  team.id = j.at("team_id").get<std::string>();
  team.pairs.clear();
  if (j.contains("pairs")) {
    for (const auto& p : j.at("pairs")) {
      if (!p.is_array() || p.size() != 2) throw Error(ErrorCode::MalformedTeam, "each pair lists two ids");
      team.pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    }
  } else if (j.contains("improvements")) {
    team.pairs = pair_participants(j.at("improvements").get<std::map<std::string, double>>());
  } else {
    throw Error(ErrorCode::MalformedTeam, "team needs pairs or improvements");
  }
}

void to_json(nlohmann::json& j, const ConditionAssignment& a) {
  j = nlohmann::json{{"participant_id", a.participant_id},
                     {"team_id", a.team_id},
                     {"period", a.period},
                     {"song", to_string(a.song)},
                     {"glove", to_string(a.glove)}};
}

void from_json(const nlohmann::json& j, ConditionAssignment& a) {
  a.participant_id = j.at("participant_id").get<std::string>();
  a.team_id = j.at("team_id").get<std::string>();
  a.period = j.at("period").get<int>();
  a.song = j.at("song").get<std::string>() == "A" ? Song::A : Song::B;
  a.glove = j.at("glove").get<std::string>() == "functional" ? Glove::functional : Glove::sham;
}

void to_json(nlohmann::json& j, const BlindedAssignment& a) {
  j = nlohmann::json{{"participant_id", a.participant_id},
                     {"team_id", a.team_id},
                     {"period", a.period},
                     {"song", to_string(a.song)}};
}

}  // namespace rehearse::study
