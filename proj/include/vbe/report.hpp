#pragma once

// JSON views of partitions, verdicts and calculator results for reports.

#include <string>
#include <vector>

#include <json.hpp>

#include "vbe/bribery.hpp"
#include "vbe/metrics.hpp"
#include "vbe/transforms.hpp"

namespace vbe {

/// Blocs in partition order; members listed by id.
inline json partition_to_json(Partition const &p, std::span<const std::string> ids,
                              std::span<const double> tokens)
{
  json blocs   = json::array();
  auto const t = bloc_tokens(p, tokens);
  for (std::size_t b = 0; b < p.blocs.size(); ++b)
  {
    std::vector<std::string> members;
    for (auto i : p.blocs[b])
      members.push_back(ids[i]);
    std::sort(members.begin(), members.end());
    blocs.push_back({{"id", members.front()},
                     {"members", members},
                     {"tokens", t[b]},
                     {"apathy", p.apathy_bloc && *p.apathy_bloc == b}});
  }
  json j;
  j["blocs"] = std::move(blocs);
  if (!p.blocs.empty())
  {
    auto const lb = largest_bloc(p, tokens);
    j["largest_bloc"] = {{"id", ids[p.blocs[lb.index].front()]}, {"tokens", lb.tokens}};
  }
  return j;
}

inline json master_to_json(MasterVerdict const &v)
{
  return {{"largest_before", v.largest_before}, {"largest_after", v.largest_after},
          {"vbe_before", v.vbe_before},         {"vbe_after", v.vbe_after},
          {"bloc_grew_or_held", v.bloc_grew_or_held}, {"vbe_fell_or_held", v.vbe_fell_or_held},
          {"holds", v.holds}};
}

inline json verdict_to_json(TheoremVerdict const &v)
{
  json j;
  j["theorem"]             = to_string(v.theorem);
  j["claim"]               = v.claim;
  j["precondition_held"]   = v.precondition_held;
  j["claim_held"]          = v.claim_held ? json(*v.claim_held) : json(nullptr);
  j["inequality_observed"] = v.inequality_observed;
  if (v.strict_applicable)
    j["strict_applicable"] = *v.strict_applicable;
  if (v.strict_held)
    j["strict_held"] = *v.strict_held;
  j["witness"] = {{"largest_before", v.largest_before},
                  {"largest_after", v.largest_after},
                  {"vbe_before", v.vbe_before},
                  {"vbe_after", v.vbe_after},
                  {"cost", v.cost}};
  j["notes"] = v.notes;
  return j;
}

inline json scale_to_json(BriberyScale const &b)
{
  return {{"largest_bloc", b.largest_bloc},           {"total", b.total},
          {"tokens_needed", b.tokens_needed},         {"tokens_needed_raw", b.tokens_needed_raw},
          {"players_needed", b.players_needed},       {"players_needed_ceil", b.players_needed_ceil}};
}

}  // namespace vbe
