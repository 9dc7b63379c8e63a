#pragma once

// Estimating VBE from observed votes: CSV vote histories, ordinal utilities
// inferred from votes, and clustering of voters with identical ordinal rows.

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vbe/core_model.hpp"
#include "vbe/metrics.hpp"

namespace vbe {

struct VoteRecord
{
  PlayerId   voter;
  ElectionId election;
  Vote       vote = Vote::Abstain;
};

struct VoteHistory
{
  std::vector<VoteRecord>       records;
  std::map<PlayerId, double>    balances;
};

/// Rows follow the sorted voter ids; columns follow the sorted election ids.
struct OrdinalUtilityMatrix
{
  std::vector<PlayerId>   voters;
  std::vector<ElectionId> elections;
  std::vector<SignVector> rows;
};

namespace detail {

/// Splits one CSV line. Double-quoted fields may contain commas and "" escapes.
inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no)
{
  std::vector<std::string> out;
  std::string              cur;
  bool                     quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i)
  {
    char const ch = line[i];
    if (quoted)
    {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"')
      {
        cur.push_back('"');
        ++i;
      }
      else if (ch == '"')
        quoted = false;
      else
        cur.push_back(ch);
    }
    else if (ch == '"' && cur.empty())
      quoted = true;
    else if (ch == ',')
      out.push_back(std::exchange(cur, {}));
    else
      cur.push_back(ch);
  }
  if (quoted)
    throw InputError("line " + std::to_string(line_no) + ": unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

/// Header-checked rows of a CSV document. Blank lines are skipped, a trailing
/// CR is stripped.
inline std::vector<std::vector<std::string>> read_csv(std::string_view text,
                                                      std::vector<std::string> const &header,
                                                      std::string const &what)
{
  std::vector<std::vector<std::string>> rows;
  std::istringstream                   in{std::string(text)};
  std::string                          line;
  std::size_t                          line_no = 0;
  bool                                 seen_header = false;
  while (std::getline(in, line))
  {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    auto fields = split_csv_line(line, line_no);
    if (!seen_header)
    {
      if (fields != header)
      {
        std::string want;
        for (auto const &h : header)
          want += (want.empty() ? "" : ",") + h;
        throw InputError(what + ": expected header '" + want + "'");
      }
      seen_header = true;
      continue;
    }
    if (fields.size() != header.size())
      throw InputError(what + " line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields");
    rows.push_back(std::move(fields));
  }
  if (!seen_header)
    throw InputError(what + ": missing header");
  return rows;
}

inline double parse_balance(std::string const &s, std::string const &where)
{
  std::size_t used = 0;
  double      v    = 0.0;
  try
  {
    v = std::stod(s, &used);
  }
  catch (std::exception const &)
  {
    throw InputError(where + ": '" + s + "' is not a number");
  }
  if (used != s.size() || !std::isfinite(v))
    throw InputError(where + ": '" + s + "' is not a number");
  if (v < 0.0)
    throw InputError(where + ": negative balance");
  return v;
}

}  // namespace detail

/// Parses `voter,election,vote` and `voter,tokens` documents.
inline VoteHistory parse_history(std::string_view votes_csv, std::string_view balances_csv)
{
  VoteHistory h;
  for (auto const &row : detail::read_csv(balances_csv, {"voter", "tokens"}, "balances"))
  {
    if (row[0].empty())
      throw InputError("balances: empty voter id");
    if (!h.balances.emplace(row[0], detail::parse_balance(row[1], "balances." + row[0])).second)
      throw InputError("balances: duplicate voter '" + row[0] + "'");
  }

  std::set<std::pair<PlayerId, ElectionId>> seen;
  for (auto const &row : detail::read_csv(votes_csv, {"voter", "election", "vote"}, "votes"))
  {
    if (row[0].empty() || row[1].empty())
      throw InputError("votes: empty voter or election id");
    auto v = parse_vote(row[2]);
    if (!v)
      throw InputError("votes: unknown vote literal '" + row[2] + "'");
    if (!seen.insert({row[0], row[1]}).second)
      throw InputError("votes: duplicate record for (" + row[0] + ", " + row[1] + ")");
    if (!h.balances.count(row[0]))
      throw InputError("votes: voter '" + row[0] + "' has no balance");
    h.records.push_back({row[0], row[1], *v});
  }
  return h;
}

/// true -> +1, false -> -1, abstain or no record -> 0. Every voter with a
/// balance gets a row.
inline OrdinalUtilityMatrix infer_ordinal(VoteHistory const &h)
{
  OrdinalUtilityMatrix m;
  for (auto const &[voter, _] : h.balances)
    m.voters.push_back(voter);
  std::set<ElectionId> es;
  for (auto const &r : h.records)
    es.insert(r.election);
  m.elections.assign(es.begin(), es.end());

  std::map<PlayerId, std::size_t>   vi;
  std::map<ElectionId, std::size_t> ei;
  for (std::size_t i = 0; i < m.voters.size(); ++i)
    vi[m.voters[i]] = i;
  for (std::size_t k = 0; k < m.elections.size(); ++k)
    ei[m.elections[k]] = k;

  m.rows.assign(m.voters.size(), SignVector(m.elections.size(), 0));
  for (auto const &r : h.records)
  {
    auto it = vi.find(r.voter);
    if (it == vi.end())
      throw InputError("infer_ordinal: voter '" + r.voter + "' has no balance");
    m.rows[it->second][ei.at(r.election)] =
        r.vote == Vote::True ? 1 : (r.vote == Vote::False ? -1 : 0);
  }
  return m;
}

struct Estimate
{
  OrdinalUtilityMatrix ordinal;
  Partition            partition;
  std::vector<double>  tokens;  ///< aligned with ordinal.voters
  double               bits = 0.0;
};

inline Estimate estimate_vbe(VoteHistory const &h, EntropySpec const &f)
{
  if (f.kind == EntropySpec::Kind::NegSumSq)
    throw InputError("estimate_vbe: neg_sum_sq needs cardinal utilities");
  Estimate e;
  e.ordinal   = infer_ordinal(h);
  e.partition = partition_by_signs(e.ordinal.voters, e.ordinal.rows);
  for (auto const &v : e.ordinal.voters)
    e.tokens.push_back(h.balances.at(v));
  e.bits = entropy(e.partition, e.tokens, f);
  return e;
}

/// The votes a rational player casts in every election of `s`, as a history.
inline VoteHistory history_from_scenario(Scenario const &s)
{
  VoteHistory h;
  for (std::size_t i = 0; i < s.players.size(); ++i)
  {
    h.balances[s.players[i].id] = s.players[i].tokens;
    for (std::size_t k = 0; k < s.elections.size(); ++k)
      h.records.push_back({s.players[i].id, s.elections[k], rational_vote(s.utilities[i][k], s.epsilon)});
  }
  return h;
}

inline std::string history_votes_csv(VoteHistory const &h)
{
  std::string out = "voter,election,vote\n";
  for (auto const &r : h.records)
    out += r.voter + "," + r.election + "," + to_string(r.vote) + "\n";
  return out;
}

}  // namespace vbe
