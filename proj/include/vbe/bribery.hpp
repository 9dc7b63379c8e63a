#pragma once

// Bribery economics: flip costs, internal/external bribery scale, quadratic
// voting, and the pivotal-bribe game.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "vbe/core_model.hpp"
#include "vbe/metrics.hpp"

namespace vbe {

/// Cost to make `desired` the preferred outcome: max(2 util(e, !desired) + eps, 0).
inline double flip_cost(double u_true, bool desired, double epsilon)
{
  double const u_opposite = desired ? -u_true : u_true;
  return std::max(2.0 * u_opposite + epsilon, 0.0);
}

/// Utility entry after a successful flip toward `desired`. Cells already
/// outside the dead zone (half-width `dead_zone`) on the desired side are left
/// alone; anything else moves to |u| + bump on the desired side, nudged just
/// past the dead zone when that sum would land inside it.
inline double flipped_utility(double u_true, bool desired, double bump, double dead_zone)
{
  std::int8_t const want = desired ? 1 : -1;
  if (dead_zone_sign(u_true, dead_zone) == want)
    return u_true;
  double magnitude = std::fabs(u_true) + bump;
  if (!(magnitude > dead_zone))
    magnitude = std::nextafter(dead_zone, std::numeric_limits<double>::infinity());
  return want * magnitude;
}

struct BriberyScale
{
  double largest_bloc     = 0.0;
  double total            = 0.0;
  double tokens_needed_raw = 0.0;  ///< q T - t(B), may be negative
  double tokens_needed    = 0.0;   ///< clamped at 0
  double players_needed   = 0.0;   ///< q T / t(B)
  double players_needed_ceil = 0.0;
};

inline BriberyScale bribery_scale(Scenario const &s, ClusteringSpec const &c)
{
  auto const p      = cluster(s, c);
  auto const tokens = s.token_vector();
  BriberyScale b;
  b.largest_bloc        = largest_bloc(p, tokens).tokens;
  b.total               = total_tokens(tokens);
  b.tokens_needed_raw   = s.q * b.total - b.largest_bloc;
  b.tokens_needed       = std::max(0.0, b.tokens_needed_raw);
  b.players_needed      = s.q * b.total / b.largest_bloc;
  b.players_needed_ceil = std::ceil(b.players_needed - kTolerance);
  return b;
}

enum class WeightingMode
{
  Linear,
  Quadratic
};

inline double vote_weight(double balance, WeightingMode mode)
{
  return mode == WeightingMode::Linear ? balance : std::sqrt(balance);
}

/// t(P)/sum t  <  sqrt(t(P))/sum sqrt(t).
inline bool qv_benefit(std::size_t player, std::span<const double> tokens)
{
  if (player >= tokens.size() || !(tokens[player] > 0.0))
    throw InputError("qv_benefit: player must hold a positive balance");
  double sum_lin = 0.0, sum_sqrt = 0.0;
  for (double t : tokens)
  {
    sum_lin += t;
    sum_sqrt += std::sqrt(t);
  }
  return definitely_lt(tokens[player] / sum_lin, std::sqrt(tokens[player]) / sum_sqrt);
}

struct BribeFraction
{
  double cost     = 0.0;
  double fraction = 0.0;
};

/// Cost of flipping every (target, election) cell toward `desired`, and the
/// share of total vote weight the target set carries under `mode`.
inline BribeFraction bribe_set_fraction(Scenario const &s, std::span<const std::size_t> target,
                                        bool desired, WeightingMode mode)
{
  BribeFraction r;
  double        all = 0.0;
  for (auto const &p : s.players)
    all += vote_weight(p.tokens, mode);
  for (auto i : target)
  {
    for (double u : s.utilities.at(i))
      r.cost += flip_cost(u, desired, s.epsilon);
    r.fraction += vote_weight(s.players[i].tokens, mode);
  }
  r.fraction = all > 0.0 ? r.fraction / all : 0.0;
  return r;
}

/// Cheapest expenditure controlling strictly more than a q share of vote
/// weight, buying from `candidates` with divisible bribes (part of a player's
/// weight for the same part of its cost). Returns +inf when the candidates
/// cannot reach the threshold.
///
/// This is a fractional knapsack: buy in increasing cost-per-weight order.
inline double divisible_budget_to_ensure(Scenario const &s, std::span<const std::size_t> candidates,
                                         bool desired, WeightingMode mode)
{
  double all = 0.0;
  for (auto const &p : s.players)
    all += vote_weight(p.tokens, mode);
  double const need = s.q * all;

  struct Item
  {
    double weight, cost;
  };
  std::vector<Item> items;
  for (auto i : candidates)
  {
    Item it{vote_weight(s.players[i].tokens, mode), 0.0};
    for (double u : s.utilities.at(i))
      it.cost += flip_cost(u, desired, s.epsilon);
    if (it.weight > 0.0)
      items.push_back(it);
  }
  std::sort(items.begin(), items.end(),
            [](Item const &a, Item const &b) { return a.cost * b.weight < b.cost * a.weight; });

  double have = 0.0, spent = 0.0;
  for (auto const &it : items)
  {
    if (have + it.weight >= need)
      return spent + it.cost * (need - have) / it.weight;
    have += it.weight;
    spent += it.cost;
  }
  return std::numeric_limits<double>::infinity();
}

/// Cheapest whole-player bribe set controlling strictly more than a q share,
/// by enumeration over subsets of `candidates` (at most 20).
inline double discrete_budget_to_ensure(Scenario const &s, std::span<const std::size_t> candidates,
                                        bool desired, WeightingMode mode)
{
  if (candidates.size() > 20)
    throw InputError("discrete_budget_to_ensure: too many candidates to enumerate");
  double all = 0.0;
  for (auto const &p : s.players)
    all += vote_weight(p.tokens, mode);
  std::vector<double> w, c;
  for (auto i : candidates)
  {
    w.push_back(vote_weight(s.players[i].tokens, mode));
    double cost = 0.0;
    for (double u : s.utilities.at(i))
      cost += flip_cost(u, desired, s.epsilon);
    c.push_back(cost);
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << candidates.size()); ++mask)
  {
    double weight = 0.0, cost = 0.0;
    for (std::size_t b = 0; b < candidates.size(); ++b)
      if (mask & (1u << b))
      {
        weight += w[b];
        cost += c[b];
      }
    if (definitely_gt(weight, s.q * all))
      best = std::min(best, cost);
  }
  return best;
}

/// A scenario evaluated under both weightings. Utilities may differ once
/// votes are square-root weighted: `quadratic_utilities` holds the rows that
/// apply under quadratic voting.
struct QvInstance
{
  Scenario                linear;
  std::vector<UtilityRow> quadratic_utilities;

  Scenario quadratic() const
  {
    Scenario s  = linear;
    s.utilities = quadratic_utilities;
    return s;
  }

  bool unchanged(std::size_t i) const { return linear.utilities.at(i) == quadratic_utilities.at(i); }

  /// Players that benefit from quadratic voting and whose utilities are unchanged.
  std::vector<std::size_t> unchanged_beneficiaries() const
  {
    auto const               tokens = linear.token_vector();
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < tokens.size(); ++i)
      if (tokens[i] > 0.0 && unchanged(i) && qv_benefit(i, tokens))
        out.push_back(i);
    return out;
  }
};

struct QvComparison
{
  BribeFraction linear;
  BribeFraction quadratic;
};

inline QvComparison qv_compare(QvInstance const &q, std::span<const std::size_t> target, bool desired)
{
  return {bribe_set_fraction(q.linear, target, desired, WeightingMode::Linear),
          bribe_set_fraction(q.quadratic(), target, desired, WeightingMode::Quadratic)};
}

/// Vote-weight gain when a whale's balance is spread evenly over n accounts
/// under square-root weighting: sqrt(t/n) n / sqrt(t) = sqrt(n).
inline double quadratic_sybil_amplification(double whale_tokens, long long n_accounts)
{
  if (n_accounts < 1)
    throw InputError("quadratic_sybil_amplification: need at least one account");
  if (!(whale_tokens > 0.0))
    throw InputError("quadratic_sybil_amplification: whale balance must be positive");
  auto const n = static_cast<double>(n_accounts);
  return std::sqrt(whale_tokens / n) * n / std::sqrt(whale_tokens);
}

/// Majority vote among an odd number n of voters who each value "yes" at U.
/// The briber wants "no": a voter voting no while exactly (n+1)/2 vote no is
/// pivotal and is paid 2U + eps; any other no-voter is paid eps.
struct PivotalBribeGame
{
  int    n       = 3;
  double utility = 1.0;  ///< U
  double epsilon = 0.01;

  void validate() const
  {
    if (n < 1 || n % 2 == 0)
      throw InputError("pivotal bribe: n must be odd and positive");
    if (!(utility > 0.0))
      throw InputError("pivotal bribe: U must be positive");
    if (!(epsilon > 0.0))
      throw InputError("pivotal bribe: epsilon must be positive");
  }

  double pivotal_payment() const { return 2.0 * utility + epsilon; }
};

struct PivotalOutcome
{
  bool                outcome_yes = true;
  int                 no_votes    = 0;
  std::vector<double> payments;  ///< per voter
  std::vector<double> payoffs;   ///< outcome utility plus payment
  std::vector<bool>   pivotal;
  double              briber_cost = 0.0;
};

inline PivotalOutcome pivotal_bribe_evaluate(PivotalBribeGame const &g, std::vector<bool> const &accept)
{
  g.validate();
  if (accept.size() != static_cast<std::size_t>(g.n))
    throw InputError("pivotal bribe: one acceptance flag per voter");
  PivotalOutcome o;
  o.no_votes      = static_cast<int>(std::count(accept.begin(), accept.end(), true));
  int const half  = (g.n + 1) / 2;
  o.outcome_yes   = o.no_votes < half;
  double const ou = o.outcome_yes ? g.utility : -g.utility;
  for (int i = 0; i < g.n; ++i)
  {
    bool const   piv = accept[i] && o.no_votes == half;
    double const pay = !accept[i] ? 0.0 : (piv ? g.pivotal_payment() : g.epsilon);
    o.pivotal.push_back(piv);
    o.payments.push_back(pay);
    o.payoffs.push_back(ou + pay);
    o.briber_cost += pay;
  }
  return o;
}

struct DominanceReport
{
  bool   accepting_weakly_dominant = true;
  double minimum_margin            = std::numeric_limits<double>::infinity();
  std::uint64_t profiles_checked   = 0;
};

/// For every voter and every profile of the others, compares accepting with
/// refusing. Exhaustive in 2^n; intended for n <= 20.
inline DominanceReport pivotal_dominance(PivotalBribeGame const &g)
{
  g.validate();
  if (g.n > 20)
    throw InputError("pivotal dominance: n too large to enumerate");
  DominanceReport r;
  std::vector<bool> profile(g.n);
  for (std::uint64_t mask = 0; mask < (1ull << g.n); ++mask)
  {
    for (int i = 0; i < g.n; ++i)
      profile[i] = (mask >> i) & 1u;
    auto const base = pivotal_bribe_evaluate(g, profile);
    for (int i = 0; i < g.n; ++i)
    {
      if (!profile[i])
        continue;  // each (voter, others) pair is visited once via the accepting profile
      auto flipped = profile;
      flipped[i]   = false;
      auto const alt    = pivotal_bribe_evaluate(g, flipped);
      double const margin = base.payoffs[i] - alt.payoffs[i];
      r.minimum_margin    = std::min(r.minimum_margin, margin);
      if (!approx_ge(margin, g.epsilon))
        r.accepting_weakly_dominant = false;
    }
    ++r.profiles_checked;
  }
  return r;
}

}  // namespace vbe
