#pragma once

// Clustering and entropy functions, Voting-Bloc Entropy, and baseline
// concentration metrics (Gini, Nakamoto).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vbe/core_model.hpp"

namespace vbe {

/// Per-election dead-zone sign: +1, -1, or 0 when |u| <= epsilon.
using SignVector = std::vector<std::int8_t>;

inline std::int8_t dead_zone_sign(double u, double epsilon)
{
  if (u > epsilon)
    return 1;
  if (u < -epsilon)
    return -1;
  return 0;
}

inline SignVector sign_vector(std::span<const double> u, double epsilon)
{
  SignVector out;
  out.reserve(u.size());
  for (double x : u)
    out.push_back(dead_zone_sign(x, epsilon));
  return out;
}

inline bool is_all_zero(SignVector const &v)
{
  return std::all_of(v.begin(), v.end(), [](std::int8_t x) { return x == 0; });
}

/// The literal per-coordinate predicate "(sgn = sgn) or (both within epsilon)".
/// Not transitive, so it is not used to build partitions.
inline bool pairwise_aligned(std::span<const double> a, std::span<const double> b, double epsilon)
{
  if (a.size() != b.size())
    throw InputError("pairwise_aligned: rows of different length");
  auto sgn = [](double x) { return (x > 0) - (x < 0); };
  for (std::size_t k = 0; k < a.size(); ++k)
  {
    bool const same_sign = sgn(a[k]) == sgn(b[k]);
    bool const both_dead = std::fabs(a[k]) <= epsilon && std::fabs(b[k]) <= epsilon;
    if (!same_sign && !both_dead)
      return false;
  }
  return true;
}

/// Blocs of player indices. Members within a bloc are sorted by player id and
/// blocs are ordered by their smallest member id.
struct Partition
{
  std::vector<std::vector<std::size_t>> blocs;
  std::optional<std::size_t>            apathy_bloc;

  std::size_t size() const { return blocs.size(); }
};

struct ClusteringSpec
{
  enum class Kind
  {
    EpsilonToc,
    Solo
  };
  Kind   kind    = Kind::EpsilonToc;
  double epsilon = 0.0;

  static ClusteringSpec epsilon_toc(double eps) { return {Kind::EpsilonToc, eps}; }
  static ClusteringSpec solo() { return {Kind::Solo, 0.0}; }
};

struct EntropySpec
{
  enum class Kind
  {
    Min,
    Shannon,
    Max,
    NegSumSq
  };
  Kind kind = Kind::Min;

  static EntropySpec min() { return {Kind::Min}; }
  static EntropySpec shannon() { return {Kind::Shannon}; }
  static EntropySpec max() { return {Kind::Max}; }
  static EntropySpec neg_sum_sq() { return {Kind::NegSumSq}; }
};

inline const char *to_string(EntropySpec::Kind k)
{
  switch (k)
  {
  case EntropySpec::Kind::Min:
    return "min";
  case EntropySpec::Kind::Shannon:
    return "shannon";
  case EntropySpec::Kind::Max:
    return "max";
  case EntropySpec::Kind::NegSumSq:
    return "neg_sum_sq";
  }
  return "min";
}

inline std::optional<EntropySpec> parse_entropy(std::string_view s)
{
  if (s == "min")
    return EntropySpec::min();
  if (s == "shannon")
    return EntropySpec::shannon();
  if (s == "max")
    return EntropySpec::max();
  if (s == "neg_sum_sq")
    return EntropySpec::neg_sum_sq();
  return std::nullopt;
}

/// Groups indices 0..n-1 by equal key. If `apathetic` is set, the group whose
/// key satisfies it becomes the apathy bloc.
template <class Key, class IsApathetic>
Partition partition_by_key(std::span<const std::string> ids, std::span<const Key> keys,
                           IsApathetic &&apathetic)
{
  std::map<Key, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < keys.size(); ++i)
    groups[keys[i]].push_back(i);

  Partition                p;
  std::vector<bool>        is_apathy;
  for (auto &[key, members] : groups)
  {
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    p.blocs.push_back(std::move(members));
    is_apathy.push_back(apathetic(key));
  }

  std::vector<std::size_t> order(p.blocs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ids[p.blocs[a].front()] < ids[p.blocs[b].front()];
  });

  Partition sorted;
  for (std::size_t pos = 0; pos < order.size(); ++pos)
  {
    sorted.blocs.push_back(std::move(p.blocs[order[pos]]));
    if (is_apathy[order[pos]])
      sorted.apathy_bloc = pos;
  }
  return sorted;
}

inline Partition partition_by_signs(std::span<const std::string> ids,
                                    std::span<const SignVector> signs)
{
  return partition_by_key<SignVector>(ids, signs, [](SignVector const &v) { return is_all_zero(v); });
}

inline Partition solo_partition(std::span<const std::string> ids)
{
  std::vector<std::size_t> keys(ids.size());
  std::iota(keys.begin(), keys.end(), 0);
  return partition_by_key<std::size_t>(ids, keys, [](std::size_t) { return false; });
}

inline Partition cluster(Scenario const &s, ClusteringSpec const &spec)
{
  auto const ids = s.ids();
  if (spec.kind == ClusteringSpec::Kind::Solo)
    return solo_partition(ids);

  std::vector<SignVector> signs;
  signs.reserve(s.players.size());
  for (auto const &row : s.utilities)
    signs.push_back(sign_vector(row, spec.epsilon));
  return partition_by_signs(ids, signs);
}

inline std::vector<double> bloc_tokens(Partition const &p, std::span<const double> tokens)
{
  std::vector<double> out;
  out.reserve(p.blocs.size());
  for (auto const &b : p.blocs)
  {
    double t = 0.0;
    for (auto i : b)
      t += tokens[i];
    out.push_back(t);
  }
  return out;
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b)
{
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    acc += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(acc);
}

/// -(sum over ordered pairs of d(U_i, U_j)^2).
template <class Distance>
double neg_sum_sq(std::span<const UtilityRow> rows, Distance &&distance)
{
  double acc = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j)
    {
      double const d = distance(rows[i], rows[j]);
      acc += d * d;
    }
  return acc == 0.0 ? 0.0 : -acc;
}

/// Entropy in bits of the token distribution across blocs. `rows` is required
/// only for NegSumSq.
inline double entropy(Partition const &p, std::span<const double> tokens, EntropySpec const &spec,
                      std::span<const UtilityRow> rows = {})
{
  if (spec.kind == EntropySpec::Kind::NegSumSq)
  {
    bool const singletons =
        std::all_of(p.blocs.begin(), p.blocs.end(), [](auto const &b) { return b.size() == 1; });
    if (!singletons)
      throw InputError("neg_sum_sq entropy requires solo clustering");
    if (rows.size() != tokens.size())
      throw InputError("neg_sum_sq entropy requires one utility row per player");
    return neg_sum_sq(rows, [](auto const &a, auto const &b) { return euclidean_distance(a, b); });
  }

  auto const   per_bloc = bloc_tokens(p, tokens);
  double const total    = std::accumulate(per_bloc.begin(), per_bloc.end(), 0.0);
  if (!(total > 0.0))
    throw InputError("entropy: total tokens must be positive");

  switch (spec.kind)
  {
  case EntropySpec::Kind::Min: {
    double const largest = *std::max_element(per_bloc.begin(), per_bloc.end());
    return -std::log2(largest / total) + 0.0;
  }
  case EntropySpec::Kind::Shannon: {
    double h = 0.0;
    for (double t : per_bloc)
      if (t > 0.0)
      {
        double const share = t / total;
        h -= share * std::log2(share);
      }
    return h + 0.0;
  }
  case EntropySpec::Kind::Max: {
    auto const support = std::count_if(per_bloc.begin(), per_bloc.end(), [](double t) { return t > 0.0; });
    return std::log2(static_cast<double>(support));
  }
  default:
    break;
  }
  return 0.0;
}

inline double vbe(Scenario const &s, ClusteringSpec const &c, EntropySpec const &f)
{
  auto const tokens = s.token_vector();
  return entropy(cluster(s, c), tokens, f, s.utilities);
}

/// Convenience for the instantiation used by every theorem: epsilon-TOC at
/// the scenario's epsilon with min-entropy.
inline double vbe_min(Scenario const &s)
{
  return vbe(s, ClusteringSpec::epsilon_toc(s.epsilon), EntropySpec::min());
}

struct LargestBloc
{
  std::size_t index = 0;
  double      tokens = 0.0;
};

/// A bloc of maximal holdings; ties go to the bloc with the smallest member id,
/// which is the first in partition order.
inline LargestBloc largest_bloc(Partition const &p, std::span<const double> tokens)
{
  if (p.blocs.empty())
    throw InputError("largest_bloc: empty partition");
  auto const  per_bloc = bloc_tokens(p, tokens);
  LargestBloc best{0, per_bloc[0]};
  for (std::size_t b = 1; b < per_bloc.size(); ++b)
    if (definitely_gt(per_bloc[b], best.tokens))
      best = {b, per_bloc[b]};
  return best;
}

struct MasterVerdict
{
  double largest_before = 0.0;  ///< t(B)
  double largest_after  = 0.0;  ///< t'(B')
  double vbe_before     = 0.0;
  double vbe_after      = 0.0;
  bool   bloc_grew_or_held = false;  ///< t'(B') >= t(B)
  bool   vbe_fell_or_held  = false;  ///< VBE_before >= VBE_after
  bool   holds             = false;  ///< the biconditional
};

/// Evaluates both sides of the master biconditional for min-entropy
/// t'(B') >= t(B)  <=>  VBE_before >= VBE_after.
inline MasterVerdict check_master_theorem(Scenario const &before, Scenario const &after,
                                          ClusteringSpec const &c)
{
  double const tb = total_tokens(before);
  double const ta = total_tokens(after);
  if (!approx_eq(tb, ta))
    throw InputError("check_master_theorem: token totals differ (" + std::to_string(tb) + " vs " +
                     std::to_string(ta) + ")");

  auto const tok_b = before.token_vector();
  auto const tok_a = after.token_vector();
  auto const pb    = cluster(before, c);
  auto const pa    = cluster(after, c);

  MasterVerdict v;
  v.largest_before    = largest_bloc(pb, tok_b).tokens;
  v.largest_after     = largest_bloc(pa, tok_a).tokens;
  v.vbe_before        = entropy(pb, tok_b, EntropySpec::min());
  v.vbe_after         = entropy(pa, tok_a, EntropySpec::min());
  v.bloc_grew_or_held = approx_ge(v.largest_after, v.largest_before);
  v.vbe_fell_or_held  = approx_ge(v.vbe_before, v.vbe_after);
  v.holds             = v.bloc_grew_or_held == v.vbe_fell_or_held;
  return v;
}

/// Gini coefficient of the balances: sum_ij |x_i - x_j| / (2 n sum x).
inline double gini(std::span<const double> tokens)
{
  if (tokens.empty())
    throw InputError("gini: empty token map");
  double const total = total_tokens(tokens);
  if (!(total > 0.0))
    return 0.0;
  std::vector<double> x(tokens.begin(), tokens.end());
  std::sort(x.begin(), x.end());
  // Sorted form of the pairwise sum: sum_i (2i - n + 1) x_i.
  double     acc = 0.0;
  auto const n   = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += (2.0 * static_cast<double>(i) - n + 1.0) * x[i];
  return acc / (n * total);
}

/// Smallest number of largest holders whose combined share strictly exceeds q.
inline std::size_t nakamoto(std::span<const double> tokens, double q)
{
  if (tokens.empty())
    throw InputError("nakamoto: empty token map");
  std::vector<double> x(tokens.begin(), tokens.end());
  std::sort(x.begin(), x.end(), std::greater<>());
  double const total = total_tokens(tokens);
  double       acc   = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    acc += x[i];
    if (definitely_gt(acc, q * total))
      return i + 1;
  }
  return x.size();
}

}  // namespace vbe
