#pragma once

// Strict JSON reading/writing for Scenario:
//   {players:[{id,tokens}], elections:[id], utilities:{player:{election:number}}, epsilon, q}

#include <limits>
#include <set>
#include <string>

#include <json.hpp>

#include "vbe/core_model.hpp"

namespace vbe {

using json = nlohmann::ordered_json;

namespace detail {

inline void reject_unknown_keys(json const &obj, std::set<std::string> const &allowed,
                                std::string const &where)
{
  if (!obj.is_object())
    throw InputError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw InputError(where + ": unknown field '" + it.key() + "'");
}

inline json const &require(json const &obj, std::string const &key, std::string const &where)
{
  auto it = obj.find(key);
  if (it == obj.end())
    throw InputError(where + ": missing field '" + key + "'");
  return *it;
}

inline double require_number(json const &v, std::string const &where)
{
  if (!v.is_number())
    throw InputError(where + ": expected a number");
  return v.get<double>();
}

inline std::string require_string(json const &v, std::string const &where)
{
  if (!v.is_string())
    throw InputError(where + ": expected a string");
  return v.get<std::string>();
}

}  // namespace detail

/// Parses a Scenario. Schema violations throw InputError; semantic invariants
/// (completeness, signs) are left to validate_scenario.
inline Scenario scenario_from_json(json const &j)
{
  using namespace detail;
  reject_unknown_keys(j, {"players", "elections", "utilities", "epsilon", "q"}, "scenario");

  Scenario s;
  auto const &players = require(j, "players", "scenario");
  if (!players.is_array())
    throw InputError("scenario.players: expected an array");
  for (auto const &p : players)
  {
    reject_unknown_keys(p, {"id", "tokens"}, "scenario.players[]");
    s.players.push_back({require_string(require(p, "id", "player"), "player.id"),
                         require_number(require(p, "tokens", "player"), "player.tokens")});
  }

  auto const &elections = require(j, "elections", "scenario");
  if (!elections.is_array())
    throw InputError("scenario.elections: expected an array");
  for (auto const &e : elections)
    s.elections.push_back(require_string(e, "scenario.elections[]"));

  s.utilities.assign(s.players.size(),
                     UtilityRow(s.elections.size(), std::numeric_limits<double>::quiet_NaN()));
  auto const &utils = require(j, "utilities", "scenario");
  if (!utils.is_object())
    throw InputError("scenario.utilities: expected an object");
  for (auto it = utils.begin(); it != utils.end(); ++it)
  {
    auto pi = s.player_index(it.key());
    if (!pi)
      throw InputError("scenario.utilities: unknown player '" + it.key() + "'");
    if (!it.value().is_object())
      throw InputError("scenario.utilities." + it.key() + ": expected an object");
    for (auto jt = it.value().begin(); jt != it.value().end(); ++jt)
    {
      auto ek = s.election_index(jt.key());
      if (!ek)
        throw InputError("scenario.utilities." + it.key() + ": unknown election '" + jt.key() + "'");
      s.utilities[*pi][*ek] = require_number(jt.value(), "utility");
    }
  }

  s.epsilon = require_number(require(j, "epsilon", "scenario"), "scenario.epsilon");
  s.q       = require_number(require(j, "q", "scenario"), "scenario.q");
  return s;
}

inline json scenario_to_json(Scenario const &s)
{
  json j;
  j["players"] = json::array();
  for (auto const &p : s.players)
    j["players"].push_back({{"id", p.id}, {"tokens", p.tokens}});
  j["elections"] = s.elections;
  json u         = json::object();
  for (std::size_t i = 0; i < s.players.size(); ++i)
  {
    json row = json::object();
    for (std::size_t k = 0; k < s.elections.size(); ++k)
      if (i < s.utilities.size() && k < s.utilities[i].size() && !std::isnan(s.utilities[i][k]))
        row[s.elections[k]] = s.utilities[i][k];
    u[s.players[i].id] = std::move(row);
  }
  j["utilities"] = std::move(u);
  j["epsilon"]   = s.epsilon;
  j["q"]         = s.q;
  return j;
}

}  // namespace vbe
