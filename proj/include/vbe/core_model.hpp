#pragma once

// DAO abstraction: token holders, binary elections, utilities and the
// token-weighted threshold rule.

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vbe/common.hpp"

namespace vbe {

using PlayerId   = std::string;
using ElectionId = std::string;

/// A player's utility row: util(e, true) for each election, in election order.
/// util(e, false) is always -util(e, true).
using UtilityRow = std::vector<double>;

enum class Vote
{
  True,
  False,
  Abstain
};

inline const char *to_string(Vote v)
{
  switch (v)
  {
  case Vote::True:
    return "true";
  case Vote::False:
    return "false";
  case Vote::Abstain:
    return "abstain";
  }
  return "abstain";
}

inline std::optional<Vote> parse_vote(std::string_view s)
{
  if (s == "true")
    return Vote::True;
  if (s == "false")
    return Vote::False;
  if (s == "abstain")
    return Vote::Abstain;
  return std::nullopt;
}

inline Vote negate(Vote v)
{
  switch (v)
  {
  case Vote::True:
    return Vote::False;
  case Vote::False:
    return Vote::True;
  default:
    return Vote::Abstain;
  }
}

struct Player
{
  PlayerId id;
  double   tokens = 0.0;
};

/// (players, elections, utilities, tokens) plus the apathy threshold and the
/// ensure-outcome threshold fraction q.
///
/// utilities[i][k] is util(elections[k], true) for players[i]. A NaN cell
/// marks a missing utility (only produced by lenient construction; the JSON
/// reader rejects nothing beyond schema and leaves validation here).
struct Scenario
{
  std::vector<Player>     players;
  std::vector<ElectionId> elections;
  std::vector<UtilityRow> utilities;
  double                  epsilon = 0.0;
  double                  q       = 0.5;

  std::size_t num_players() const { return players.size(); }
  std::size_t num_elections() const { return elections.size(); }

  std::optional<std::size_t> player_index(std::string_view id) const
  {
    for (std::size_t i = 0; i < players.size(); ++i)
      if (players[i].id == id)
        return i;
    return std::nullopt;
  }

  std::optional<std::size_t> election_index(std::string_view id) const
  {
    for (std::size_t k = 0; k < elections.size(); ++k)
      if (elections[k] == id)
        return k;
    return std::nullopt;
  }

  std::vector<double> token_vector() const
  {
    std::vector<double> t;
    t.reserve(players.size());
    for (auto const &p : players)
      t.push_back(p.tokens);
    return t;
  }

  std::vector<PlayerId> ids() const
  {
    std::vector<PlayerId> out;
    out.reserve(players.size());
    for (auto const &p : players)
      out.push_back(p.id);
    return out;
  }
};

struct Violation
{
  enum class Kind
  {
    DuplicatePlayer,
    DuplicateElection,
    NegativeBalance,
    NonPositiveTotal,
    MissingUtility,
    ExtraUtility,
    NegativeEpsilon,
    ThresholdOutOfRange,
  };

  Kind        kind;
  std::string detail;

  bool operator==(Violation const &) const = default;
};

inline const char *to_string(Violation::Kind k)
{
  using K = Violation::Kind;
  switch (k)
  {
  case K::DuplicatePlayer:
    return "duplicate-player";
  case K::DuplicateElection:
    return "duplicate-election";
  case K::NegativeBalance:
    return "negative-balance";
  case K::NonPositiveTotal:
    return "non-positive-total";
  case K::MissingUtility:
    return "missing-utility";
  case K::ExtraUtility:
    return "extra-utility";
  case K::NegativeEpsilon:
    return "negative-epsilon";
  case K::ThresholdOutOfRange:
    return "threshold-out-of-range";
  }
  return "unknown";
}

/// Checks every structural invariant of a Scenario. Violations are data: an
/// empty result means the scenario is valid.
inline std::vector<Violation> validate_scenario(Scenario const &s)
{
  using K = Violation::Kind;
  std::vector<Violation> out;

  std::set<std::string> seen;
  for (auto const &p : s.players)
  {
    if (!seen.insert(p.id).second)
      out.push_back({K::DuplicatePlayer, p.id});
    if (!(p.tokens >= 0.0))
      out.push_back({K::NegativeBalance, p.id});
  }

  std::set<std::string> seen_e;
  for (auto const &e : s.elections)
    if (!seen_e.insert(e).second)
      out.push_back({K::DuplicateElection, e});

  double total = 0.0;
  for (auto const &p : s.players)
    total += p.tokens;
  if (!(total > 0.0))
    out.push_back({K::NonPositiveTotal, std::to_string(total)});

  for (std::size_t i = 0; i < s.players.size(); ++i)
  {
    auto const *row = i < s.utilities.size() ? &s.utilities[i] : nullptr;
    for (std::size_t k = 0; k < s.elections.size(); ++k)
    {
      if (row == nullptr || k >= row->size() || std::isnan((*row)[k]))
        out.push_back({K::MissingUtility, s.players[i].id + "/" + s.elections[k]});
    }
    if (row != nullptr && row->size() > s.elections.size())
      out.push_back({K::ExtraUtility, s.players[i].id});
  }
  if (s.utilities.size() > s.players.size())
    out.push_back({K::ExtraUtility, "rows beyond player list"});

  if (!(s.epsilon >= 0.0))
    out.push_back({K::NegativeEpsilon, std::to_string(s.epsilon)});
  if (!(s.q > 0.0 && s.q < 1.0))
    out.push_back({K::ThresholdOutOfRange, std::to_string(s.q)});

  return out;
}

inline void require_valid(Scenario const &s)
{
  auto v = validate_scenario(s);
  if (!v.empty())
    throw InputError(std::string("invalid scenario: ") + to_string(v.front().kind) + " (" +
                     v.front().detail + ")");
}

inline double total_tokens(std::span<const double> tokens)
{
  return std::accumulate(tokens.begin(), tokens.end(), 0.0);
}

inline double total_tokens(Scenario const &s)
{
  double t = 0.0;
  for (auto const &p : s.players)
    t += p.tokens;
  return t;
}

/// True iff tokens voting `desired` strictly exceed q * total tokens.
/// `votes` is indexed by player position.
inline bool outcome_ensured(Scenario const &s, std::span<const Vote> votes, bool desired)
{
  if (votes.size() != s.players.size())
    throw InputError("outcome_ensured: one vote per player required");
  Vote const want = desired ? Vote::True : Vote::False;
  double     in_favour = 0.0;
  for (std::size_t i = 0; i < votes.size(); ++i)
    if (votes[i] == want)
      in_favour += s.players[i].tokens;
  return definitely_gt(in_favour, s.q * total_tokens(s));
}

inline bool outcome_ensured(Scenario const &s, std::map<PlayerId, Vote> const &votes, bool desired)
{
  std::vector<Vote> v(s.players.size(), Vote::Abstain);
  for (std::size_t i = 0; i < s.players.size(); ++i)
  {
    auto it = votes.find(s.players[i].id);
    if (it == votes.end())
      throw InputError("outcome_ensured: missing vote for " + s.players[i].id);
    v[i] = it->second;
  }
  return outcome_ensured(s, v, desired);
}

/// Rational vote under the dead zone: |u| <= epsilon abstains.
inline Vote rational_vote(double u, double epsilon)
{
  if (u > epsilon)
    return Vote::True;
  if (u < -epsilon)
    return Vote::False;
  return Vote::Abstain;
}

/// Token-weighted tally of the votes actually cast, with a participation
/// quorum. Used for "who wins" questions, as opposed to outcome_ensured.
struct Tally
{
  double yes       = 0.0;
  double no        = 0.0;
  double abstained = 0.0;
  bool   quorum_met = false;

  /// Passed iff quorum is met and yes strictly beats no.
  bool passed() const { return quorum_met && definitely_gt(yes, no); }
};

inline Tally tally(std::span<const double> tokens, std::span<const Vote> votes, double quorum)
{
  if (votes.size() != tokens.size())
    throw InputError("tally: one vote per holder required");
  Tally t;
  for (std::size_t i = 0; i < votes.size(); ++i)
  {
    switch (votes[i])
    {
    case Vote::True:
      t.yes += tokens[i];
      break;
    case Vote::False:
      t.no += tokens[i];
      break;
    case Vote::Abstain:
      t.abstained += tokens[i];
      break;
    }
  }
  double const total = t.yes + t.no + t.abstained;
  t.quorum_met       = approx_ge(t.yes + t.no, quorum * total);
  return t;
}

}  // namespace vbe
