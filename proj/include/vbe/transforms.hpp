#pragma once

// System transformations as Scenario rewrites, and per-theorem verdicts that
// check a transformation's precondition and its VBE inequality.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "vbe/bribery.hpp"
#include "vbe/core_model.hpp"
#include "vbe/metrics.hpp"
#include "vbe/scenario_json.hpp"

namespace vbe {

/// Split one account's balance across new accounts with the same utilities.
/// The source stays in the scenario with balance 0.
struct SybilSplit
{
  PlayerId            source;
  std::vector<Player> accounts;
};

struct MakeApathetic
{
  std::vector<PlayerId> players;
};

/// Each delegator hands its full balance to its delegate.
struct Delegation
{
  std::map<PlayerId, PlayerId> assignment;  ///< delegator -> delegate
};

/// Targeted players come to prefer `direction` in every election.
struct Herding
{
  std::vector<PlayerId> players;
  bool                  direction = true;
  std::optional<double> epsilon;  ///< defaults to the scenario's
};

struct Slate
{
  ElectionId              id;
  std::vector<ElectionId> members;
};

struct Slates
{
  std::vector<Slate> slates;
};

/// A briber pays each targeted player to prefer `desired` in each targeted
/// election. An empty election list means every election.
struct BribeFlip
{
  std::vector<PlayerId>   players;
  std::vector<ElectionId> elections;
  bool                    desired = true;
  std::optional<double>   epsilon;
};

using Transformation = std::variant<SybilSplit, MakeApathetic, Delegation, Herding, Slates, BribeFlip>;

inline const char *kind_name(Transformation const &t)
{
  static const char *names[] = {"sybil", "apathy", "delegation", "herding", "slates", "bribe_flip"};
  return names[t.index()];
}

struct ApplyResult
{
  Scenario scenario;
  double   cost = 0.0;  ///< bribe expenditure; 0 except for BribeFlip
  std::set<std::size_t> changed;  ///< players of the input whose utility row changed
};

namespace detail {

inline std::size_t require_player(Scenario const &s, PlayerId const &id, char const *what)
{
  auto i = s.player_index(id);
  if (!i)
    throw InputError(std::string(what) + ": unknown player '" + id + "'");
  return *i;
}

inline std::vector<std::size_t> require_players(Scenario const &s, std::vector<PlayerId> const &ids,
                                                char const *what)
{
  std::vector<std::size_t> out;
  std::set<std::size_t>    seen;
  for (auto const &id : ids)
  {
    auto i = require_player(s, id, what);
    if (!seen.insert(i).second)
      throw InputError(std::string(what) + ": player '" + id + "' listed twice");
    out.push_back(i);
  }
  return out;
}

/// Shared rewrite of Herding and BribeFlip.
inline ApplyResult flip_rows(Scenario const &s, std::vector<std::size_t> const &players,
                             std::vector<std::size_t> const &elections, bool desired, double bump)
{
  if (bump < 0.0)
    throw InputError("flip: epsilon must be non-negative");
  ApplyResult r{s, 0.0, {}};
  for (auto i : players)
    for (auto k : elections)
    {
      double const u  = s.utilities[i][k];
      double const nu = flipped_utility(u, desired, bump, s.epsilon);
      if (nu != u)
      {
        r.scenario.utilities[i][k] = nu;
        r.cost += flip_cost(u, desired, bump);
        r.changed.insert(i);
      }
    }
  return r;
}

inline std::vector<std::size_t> all_elections(Scenario const &s)
{
  std::vector<std::size_t> k(s.elections.size());
  std::iota(k.begin(), k.end(), 0);
  return k;
}

}  // namespace detail

inline ApplyResult apply(Scenario const &s, SybilSplit const &t)
{
  auto const src = detail::require_player(s, t.source, "sybil");
  double     sum = 0.0;
  std::set<PlayerId> fresh;
  for (auto const &a : t.accounts)
  {
    if (s.player_index(a.id) || !fresh.insert(a.id).second)
      throw InputError("sybil: account id '" + a.id + "' is not new");
    if (!(a.tokens >= 0.0))
      throw InputError("sybil: negative share for '" + a.id + "'");
    sum += a.tokens;
  }
  if (t.accounts.empty())
    throw InputError("sybil: no accounts in split");
  if (!approx_eq(sum, s.players[src].tokens))
    throw InputError("sybil: shares do not sum to the source balance");

  ApplyResult r{s, 0.0, {}};
  r.scenario.players[src].tokens = 0.0;
  for (auto const &a : t.accounts)
  {
    r.scenario.players.push_back(a);
    r.scenario.utilities.push_back(s.utilities[src]);
  }
  return r;
}

inline ApplyResult apply(Scenario const &s, MakeApathetic const &t)
{
  auto const  idx = detail::require_players(s, t.players, "apathy");
  ApplyResult r{s, 0.0, {}};
  for (auto i : idx)
  {
    UtilityRow zero(s.elections.size(), 0.0);
    if (zero != s.utilities[i])
      r.changed.insert(i);
    r.scenario.utilities[i] = std::move(zero);
  }
  return r;
}

inline ApplyResult apply(Scenario const &s, Delegation const &t)
{
  if (t.assignment.empty())
    throw InputError("delegation: empty assignment");
  ApplyResult r{s, 0.0, {}};
  for (auto const &[from, to] : t.assignment)
  {
    detail::require_player(s, from, "delegation");
    detail::require_player(s, to, "delegation");
    if (t.assignment.count(to))
      throw InputError("delegation: delegate '" + to + "' is also a delegator");
  }
  for (auto const &[from, to] : t.assignment)
  {
    auto const i = *s.player_index(from);
    auto const j = *s.player_index(to);
    r.scenario.players[j].tokens += s.players[i].tokens;
    r.scenario.players[i].tokens = 0.0;
  }
  return r;
}

inline ApplyResult apply(Scenario const &s, Herding const &t)
{
  auto const idx = detail::require_players(s, t.players, "herding");
  return detail::flip_rows(s, idx, detail::all_elections(s), t.direction, t.epsilon.value_or(s.epsilon));
}

inline ApplyResult apply(Scenario const &s, BribeFlip const &t)
{
  auto const idx = detail::require_players(s, t.players, "bribe_flip");
  std::vector<std::size_t> ks;
  if (t.elections.empty())
    ks = detail::all_elections(s);
  std::set<std::size_t> seen;
  for (auto const &e : t.elections)
  {
    auto k = s.election_index(e);
    if (!k)
      throw InputError("bribe_flip: unknown election '" + e + "'");
    if (!seen.insert(*k).second)
      throw InputError("bribe_flip: election '" + e + "' listed twice");
    ks.push_back(*k);
  }
  return detail::flip_rows(s, idx, ks, t.desired, t.epsilon.value_or(s.epsilon));
}

inline ApplyResult apply(Scenario const &s, Slates const &t)
{
  std::set<ElectionId>  ids;
  std::set<std::size_t> covered;
  for (auto const &sl : t.slates)
  {
    if (!ids.insert(sl.id).second)
      throw InputError("slates: duplicate slate id '" + sl.id + "'");
    if (sl.members.empty())
      throw InputError("slates: slate '" + sl.id + "' is empty");
    for (auto const &e : sl.members)
    {
      auto k = s.election_index(e);
      if (!k)
        throw InputError("slates: unknown election '" + e + "'");
      if (!covered.insert(*k).second)
        throw InputError("slates: election '" + e + "' appears in two slates");
    }
  }
  if (covered.size() != s.elections.size())
    throw InputError("slates: slates do not cover every election");

  ApplyResult r{s, 0.0, {}};
  r.scenario.elections.clear();
  for (auto const &sl : t.slates)
    r.scenario.elections.push_back(sl.id);
  for (std::size_t i = 0; i < s.players.size(); ++i)
  {
    UtilityRow row;
    for (auto const &sl : t.slates)
    {
      double sum = 0.0;
      for (auto const &e : sl.members)
        sum += s.utilities[i][*s.election_index(e)];
      row.push_back(sum);
    }
    r.scenario.utilities[i] = std::move(row);
    r.changed.insert(i);
  }
  return r;
}

inline ApplyResult apply(Scenario const &s, Transformation const &t)
{
  require_valid(s);
  auto r = std::visit([&](auto const &x) { return apply(s, x); }, t);
  if (!approx_eq(total_tokens(s), total_tokens(r.scenario)))
    throw std::logic_error("transformation changed the token total");
  return r;
}

// ---------------------------------------------------------------------------
// Theorem verdicts

enum class TheoremId
{
  Sybil,                 // "2"
  Apathy,                // "3"
  Delegation,            // "4"
  DelegationCorollary,   // "4c"
  Herding,               // "5"
  Slates,                // "6"
  Bribery,               // "7"
};

inline const char *to_string(TheoremId id)
{
  switch (id)
  {
  case TheoremId::Sybil:
    return "2";
  case TheoremId::Apathy:
    return "3";
  case TheoremId::Delegation:
    return "4";
  case TheoremId::DelegationCorollary:
    return "4c";
  case TheoremId::Herding:
    return "5";
  case TheoremId::Slates:
    return "6";
  case TheoremId::Bribery:
    return "7";
  }
  return "?";
}

inline std::optional<TheoremId> parse_theorem(std::string_view s)
{
  for (auto id : {TheoremId::Sybil, TheoremId::Apathy, TheoremId::Delegation,
                  TheoremId::DelegationCorollary, TheoremId::Herding, TheoremId::Slates,
                  TheoremId::Bribery})
    if (s == to_string(id))
      return id;
  return std::nullopt;
}

struct TheoremVerdict
{
  TheoremId   theorem = TheoremId::Sybil;
  std::string claim;  ///< the inequality being checked, in words
  bool        precondition_held = false;
  bool        inequality_observed = false;  ///< evaluated regardless of precondition
  std::optional<bool> claim_held;           ///< set only when the precondition held
  std::optional<bool> strict_applicable;    ///< bribery only
  std::optional<bool> strict_held;
  double largest_before = 0.0;
  double largest_after  = 0.0;
  double vbe_before     = 0.0;
  double vbe_after      = 0.0;
  double cost           = 0.0;
  std::vector<std::string> notes;

  /// A held precondition with a failed claim.
  bool failed() const { return claim_held.has_value() && !*claim_held; }
};

namespace detail {

inline bool kind_matches(TheoremId id, Transformation const &t)
{
  switch (id)
  {
  case TheoremId::Sybil:
    return std::holds_alternative<SybilSplit>(t);
  case TheoremId::Apathy:
    return std::holds_alternative<MakeApathetic>(t);
  case TheoremId::Delegation:
  case TheoremId::DelegationCorollary:
    return std::holds_alternative<Delegation>(t);
  case TheoremId::Herding:
    return std::holds_alternative<Herding>(t);
  case TheoremId::Slates:
    return std::holds_alternative<Slates>(t);
  case TheoremId::Bribery:
    return std::holds_alternative<BribeFlip>(t);
  }
  return false;
}

/// Bloc index of each player.
inline std::vector<std::size_t> bloc_of(Partition const &p, std::size_t n)
{
  std::vector<std::size_t> out(n);
  for (std::size_t b = 0; b < p.blocs.size(); ++b)
    for (auto i : p.blocs[b])
      out[i] = b;
  return out;
}

/// The largest pre-transformation bloc is either untouched or entirely targeted.
inline bool largest_not_fragmented(Partition const &p, LargestBloc const &lb,
                                   std::set<std::size_t> const &targets,
                                   std::set<std::size_t> const &changed)
{
  auto const &B = p.blocs[lb.index];
  bool const untouched = std::none_of(B.begin(), B.end(), [&](auto i) { return changed.count(i); });
  bool const absorbed  = std::all_of(B.begin(), B.end(), [&](auto i) { return targets.count(i); });
  return untouched || absorbed;
}

}  // namespace detail

/// Applies `t`, evaluates theorem `id`'s precondition on the input and its
/// VBE inequality on the (before, after) pair.
inline TheoremVerdict check_theorem(Scenario const &s, Transformation const &t, TheoremId id)
{
  if (!detail::kind_matches(id, t))
    throw InputError(std::string("theorem ") + to_string(id) + " does not apply to a " + kind_name(t) +
                     " transformation");

  auto const r     = apply(s, t);
  auto const c     = ClusteringSpec::epsilon_toc(s.epsilon);
  auto const tok_b = s.token_vector();
  auto const tok_a = r.scenario.token_vector();
  auto const pb    = cluster(s, c);
  auto const pa    = cluster(r.scenario, c);
  auto const lb    = largest_bloc(pb, tok_b);
  auto const la    = largest_bloc(pa, tok_a);
  auto const per_b = bloc_tokens(pb, tok_b);
  auto const per_a = bloc_tokens(pa, tok_a);
  auto const of_b  = detail::bloc_of(pb, s.players.size());
  auto const of_a  = detail::bloc_of(pa, r.scenario.players.size());

  TheoremVerdict v;
  v.theorem        = id;
  v.largest_before = lb.tokens;
  v.largest_after  = la.tokens;
  v.vbe_before     = entropy(pb, tok_b, EntropySpec::min());
  v.vbe_after      = entropy(pa, tok_a, EntropySpec::min());
  v.cost           = r.cost;

  double const apathy_before = pb.apathy_bloc ? per_b[*pb.apathy_bloc] : 0.0;
  double const apathy_after  = pa.apathy_bloc ? per_a[*pa.apathy_bloc] : 0.0;

  bool const fell  = approx_ge(v.vbe_before, v.vbe_after);
  bool const rose  = approx_ge(v.vbe_after, v.vbe_before);

  switch (id)
  {
  case TheoremId::Sybil: {
    v.claim               = "VBE_after == VBE_before";
    v.precondition_held   = true;
    v.inequality_observed = std::fabs(v.vbe_before - v.vbe_after) <= 1e-12;
    break;
  }
  case TheoremId::Apathy: {
    v.claim             = "VBE_before >= VBE_after";
    v.precondition_held = true;
    for (auto const &id_p : std::get<MakeApathetic>(t).players)
    {
      auto const i = *s.player_index(id_p);
      if (pb.apathy_bloc && of_b[i] == *pb.apathy_bloc)
        continue;  // already apathetic
      if (!approx_ge(apathy_after, per_b[of_b[i]]))
      {
        v.precondition_held = false;
        v.notes.push_back("t(A') < t([" + id_p + "])");
      }
    }
    v.inequality_observed = fell;
    break;
  }
  case TheoremId::Delegation:
  case TheoremId::DelegationCorollary: {
    auto const &d = std::get<Delegation>(t);
    bool        delegators_apathetic = true;
    double      delegated            = 0.0;
    std::set<PlayerId> delegates;
    for (auto const &[from, to] : d.assignment)
    {
      auto const i = *s.player_index(from);
      if (!pb.apathy_bloc || of_b[i] != *pb.apathy_bloc)
      {
        delegators_apathetic = false;
        v.notes.push_back("delegator " + from + " is not apathetic");
      }
      delegated += s.players[i].tokens;
      delegates.insert(to);
    }
    if (id == TheoremId::Delegation)
    {
      v.claim             = "VBE_after >= VBE_before";
      v.precondition_held = delegators_apathetic;
      for (auto const &dl : delegates)
      {
        auto const j = *r.scenario.player_index(dl);
        if (!approx_ge(apathy_before, per_a[of_a[j]]))
        {
          v.precondition_held = false;
          v.notes.push_back("t(A) < t'([" + dl + "])");
        }
      }
      v.inequality_observed = rose;
    }
    else
    {
      v.claim = "VBE_after <= VBE_before";
      bool some_delegate_big = false;
      for (auto const &dl : delegates)
      {
        auto const j = *r.scenario.player_index(dl);
        if (approx_ge(per_a[of_a[j]], delegated))
          some_delegate_big = true;
      }
      bool const whole_whale = approx_ge(delegated, apathy_before);
      if (!some_delegate_big)
        v.notes.push_back("no delegate bloc reaches the delegated total");
      if (!whole_whale)
        v.notes.push_back("delegators hold only part of the apathy bloc");
      v.precondition_held   = delegators_apathetic && some_delegate_big && whole_whale;
      v.inequality_observed = fell;
    }
    break;
  }
  case TheoremId::Herding:
  case TheoremId::Bribery: {
    auto const &players = id == TheoremId::Herding ? std::get<Herding>(t).players
                                                   : std::get<BribeFlip>(t).players;
    std::set<std::size_t> targets;
    for (auto const &p : players)
      targets.insert(*s.player_index(p));
    v.claim             = "VBE_before >= VBE_after";
    v.precondition_held = detail::largest_not_fragmented(pb, lb, targets, r.changed);
    if (!v.precondition_held)
      v.notes.push_back("largest bloc is split by the transformation");
    v.inequality_observed = fell;
    if (id == TheoremId::Bribery)
    {
      double bribed = 0.0;
      for (auto i : targets)
        bribed = std::max(bribed, per_a[of_a[i]]);
      v.strict_applicable = definitely_gt(bribed, lb.tokens);
      v.strict_held       = definitely_gt(v.vbe_before, v.vbe_after);
    }
    break;
  }
  case TheoremId::Slates: {
    v.claim             = "VBE_before >= VBE_after";
    v.precondition_held = true;
    // Every pre-transformation bloc must land in a single post bloc.
    for (auto const &bloc : pb.blocs)
      for (auto i : bloc)
        if (of_a[i] != of_a[bloc.front()])
        {
          v.precondition_held = false;
          v.notes.push_back("bloc-mates " + s.players[bloc.front()].id + " and " + s.players[i].id +
                            " disagree on a slate");
          break;
        }
    v.inequality_observed = fell;
    break;
  }
  }

  if (v.precondition_held)
    v.claim_held = v.inequality_observed;
  return v;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline std::vector<std::string> string_list(json const &j, std::string const &where)
{
  if (!j.is_array())
    throw InputError(where + ": expected an array");
  std::vector<std::string> out;
  for (auto const &x : j)
    out.push_back(require_string(x, where + "[]"));
  return out;
}

inline bool require_bool(json const &j, std::string const &where)
{
  if (!j.is_boolean())
    throw InputError(where + ": expected a boolean");
  return j.get<bool>();
}

inline std::optional<double> optional_number(json const &j, std::string const &key, std::string const &where)
{
  auto it = j.find(key);
  if (it == j.end())
    return std::nullopt;
  return require_number(*it, where + "." + key);
}

}  // namespace detail

/// {"kind": "sybil"|"apathy"|"delegation"|"herding"|"slates"|"bribe_flip", ...}
inline Transformation transformation_from_json(json const &j)
{
  using namespace detail;
  if (!j.is_object())
    throw InputError("transformation: expected an object");
  auto const kind = require_string(require(j, "kind", "transformation"), "transformation.kind");

  if (kind == "sybil")
  {
    reject_unknown_keys(j, {"kind", "player", "split"}, "sybil");
    SybilSplit t;
    t.source           = require_string(require(j, "player", "sybil"), "sybil.player");
    auto const &split  = require(j, "split", "sybil");
    if (!split.is_array())
      throw InputError("sybil.split: expected an array");
    for (auto const &a : split)
    {
      reject_unknown_keys(a, {"id", "tokens"}, "sybil.split[]");
      t.accounts.push_back({require_string(require(a, "id", "split"), "split.id"),
                            require_number(require(a, "tokens", "split"), "split.tokens")});
    }
    return t;
  }
  if (kind == "apathy")
  {
    reject_unknown_keys(j, {"kind", "players"}, "apathy");
    return MakeApathetic{string_list(require(j, "players", "apathy"), "apathy.players")};
  }
  if (kind == "delegation")
  {
    reject_unknown_keys(j, {"kind", "assignment"}, "delegation");
    auto const &a = require(j, "assignment", "delegation");
    if (!a.is_object())
      throw InputError("delegation.assignment: expected an object");
    Delegation t;
    for (auto it = a.begin(); it != a.end(); ++it)
      t.assignment[it.key()] = require_string(it.value(), "delegation.assignment");
    return t;
  }
  if (kind == "herding")
  {
    reject_unknown_keys(j, {"kind", "players", "direction", "epsilon"}, "herding");
    Herding t;
    t.players   = string_list(require(j, "players", "herding"), "herding.players");
    t.direction = require_bool(require(j, "direction", "herding"), "herding.direction");
    t.epsilon   = optional_number(j, "epsilon", "herding");
    return t;
  }
  if (kind == "slates")
  {
    reject_unknown_keys(j, {"kind", "slates"}, "slates");
    auto const &arr = require(j, "slates", "slates");
    if (!arr.is_array())
      throw InputError("slates.slates: expected an array");
    Slates t;
    for (auto const &sl : arr)
    {
      reject_unknown_keys(sl, {"id", "elections"}, "slates[]");
      t.slates.push_back({require_string(require(sl, "id", "slate"), "slate.id"),
                          string_list(require(sl, "elections", "slate"), "slate.elections")});
    }
    return t;
  }
  if (kind == "bribe_flip")
  {
    reject_unknown_keys(j, {"kind", "players", "elections", "desired", "epsilon"}, "bribe_flip");
    BribeFlip t;
    t.players = string_list(require(j, "players", "bribe_flip"), "bribe_flip.players");
    if (j.contains("elections"))
      t.elections = string_list(j["elections"], "bribe_flip.elections");
    t.desired = require_bool(require(j, "desired", "bribe_flip"), "bribe_flip.desired");
    t.epsilon = optional_number(j, "epsilon", "bribe_flip");
    return t;
  }
  throw InputError("transformation: unknown kind '" + kind + "'");
}

inline json transformation_to_json(Transformation const &t)
{
  json j;
  j["kind"] = kind_name(t);
  std::visit(
      [&](auto const &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, SybilSplit>)
        {
          j["player"] = x.source;
          j["split"]  = json::array();
          for (auto const &a : x.accounts)
            j["split"].push_back({{"id", a.id}, {"tokens", a.tokens}});
        }
        else if constexpr (std::is_same_v<T, MakeApathetic>)
          j["players"] = x.players;
        else if constexpr (std::is_same_v<T, Delegation>)
        {
          j["assignment"] = json::object();
          for (auto const &[from, to] : x.assignment)
            j["assignment"][from] = to;
        }
        else if constexpr (std::is_same_v<T, Herding>)
        {
          j["players"]   = x.players;
          j["direction"] = x.direction;
          if (x.epsilon)
            j["epsilon"] = *x.epsilon;
        }
        else if constexpr (std::is_same_v<T, Slates>)
        {
          j["slates"] = json::array();
          for (auto const &sl : x.slates)
            j["slates"].push_back({{"id", sl.id}, {"elections", sl.members}});
        }
        else
        {
          j["players"] = x.players;
          if (!x.elections.empty())
            j["elections"] = x.elections;
          j["desired"] = x.desired;
          if (x.epsilon)
            j["epsilon"] = *x.epsilon;
        }
      },
      t);
  return j;
}

}  // namespace vbe
