// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.
//
//   acceptance --cli <vbelab> --data <dir> --work <dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "generators.hpp"
#include "oracle.hpp"
#include "theorem_cases.hpp"
#include "vbe/bribery.hpp"
#include "vbe/darkdao.hpp"
#include "vbe/darkdao_lite.hpp"
#include "vbe/estimation.hpp"
#include "vbe/script.hpp"
#include "vbe/transforms.hpp"

using namespace vbe;

namespace {

constexpr double kFloatSlack     = 1e-9;
constexpr double kSybilSlack     = 1e-12;
constexpr double kHandSlack      = 1e-9;
constexpr double kMasterSeconds  = 30.0;
constexpr int    kMasterPairs    = 10000;
constexpr int    kSoloScenarios = 10000;
constexpr int    kThousand       = 1000;

struct Paths
{
  std::string cli, data, work;
};

/// Collects the first few failures of one criterion.
class Check
{
public:
  void expect(bool ok, std::string const &what)
  {
    if (ok)
      return;
    ++failures_;
    if (notes_.size() < 3)
      notes_.push_back(what);
  }
  void note(std::string s) { info_.push_back(std::move(s)); }

  bool        ok() const { return failures_ == 0; }
  std::string summary() const
  {
    std::string out;
    for (auto const &s : ok() ? info_ : notes_)
      out += (out.empty() ? "" : "; ") + s;
    if (!ok() && failures_ > 3)
      out += "; " + std::to_string(failures_ - 3) + " more";
    return out;
  }

private:
  int                      failures_ = 0;
  std::vector<std::string> notes_, info_;
};

std::string slurp(std::string const &path)
{
  std::ifstream     in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class F>
std::optional<ErrorCode> code_of(F &&f)
{
  try
  {
    f();
  }
  catch (ProtocolError const &e)
  {
    return e.code();
  }
  return std::nullopt;
}

Message vote(std::string proposal, std::string body, std::optional<std::uint64_t> anchor = std::nullopt)
{
  return Message{std::move(proposal), "vote", std::move(body), anchor};
}

// 1 -------------------------------------------------------------------------

void master_theorem(Check &c, Paths const &)
{
  gen::Gen   g(101);
  auto const t0 = std::chrono::steady_clock::now();
  for (int trial = 0; trial < kMasterPairs; ++trial)
  {
    int const total  = g.uniform(1, 40);
    auto      before = g.scenario(g.uniform(1, 12), g.uniform(1, 6), total);
    auto      after  = g.scenario(g.uniform(1, 12), g.uniform(1, 6), total);
    auto      v      = check_master_theorem(before, after, ClusteringSpec::epsilon_toc(gen::kEps));
    double const tb = oracle::blocs(before).largest(), ta = oracle::blocs(after).largest();
    bool const   lhs = ta >= tb;
    bool const   rhs = oracle::vbe_min(before) >= oracle::vbe_min(after);
    c.expect(lhs == rhs && v.holds && v.bloc_grew_or_held == lhs && v.vbe_fell_or_held == rhs,
             "pair " + std::to_string(trial));
  }
  double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < kMasterSeconds, "took " + std::to_string(secs) + " s");
  c.note(std::to_string(kMasterPairs) + " pairs in " + std::to_string(secs).substr(0, 5) + " s");
}

// 2 -------------------------------------------------------------------------

void solo_bound(Check &c, Paths const &)
{
  gen::Gen g(102);
  for (int trial = 0; trial < kSoloScenarios; ++trial)
  {
    auto s = g.scenario_upto(12, 6);
    for (auto f : {EntropySpec::min(), EntropySpec::shannon()})
    {
      double const solo = vbe::vbe(s, ClusteringSpec::solo(), f);
      double const toc  = vbe::vbe(s, ClusteringSpec::epsilon_toc(s.epsilon), f);
      c.expect(solo >= toc - kFloatSlack, "scenario " + std::to_string(trial));
    }
  }
  c.note(std::to_string(kSoloScenarios) + " scenarios, min and shannon");
}

// 3 -------------------------------------------------------------------------

void sybil_invariance(Check &c, Paths const &)
{
  gen::Gen g(103);
  for (int trial = 0; trial < kThousand; ++trial)
  {
    auto       k     = gen::sybil_case(g);
    auto       after = vbe::apply(k.s, k.t).scenario;
    auto const cl    = ClusteringSpec::epsilon_toc(k.s.epsilon);
    for (auto f : {EntropySpec::min(), EntropySpec::shannon(), EntropySpec::max()})
      c.expect(std::fabs(vbe::vbe(k.s, cl, f) - vbe::vbe(after, cl, f)) <= kSybilSlack,
               "split " + std::to_string(trial));
    c.expect(oracle::total(after) == oracle::total(k.s), "total changed");
  }
  c.note("1000 splits, |dVBE| <= 1e-12");
}

// 4 -------------------------------------------------------------------------

Scenario apathy_instance()
{
  Scenario s;
  s.players   = {{"u1", 2}, {"u2", 1}, {"u3", 1}, {"u4", 4}};
  s.elections = {"e1", "e2"};
  s.utilities = {{5, -2}, {1, -0.3}, {-4, 2}, {0.05, 0.01}};
  s.epsilon   = 0.1;
  s.q         = 0.5;
  return s;
}

Scenario delegation_instance()
{
  Scenario s;
  s.players   = {{"d1", 1}, {"d2", 1}, {"w1", 3}, {"w2", 3}};
  s.elections = {"e"};
  s.utilities = {{1}, {-1}, {0}, {0.05}};
  s.epsilon   = 0.1;
  s.q         = 0.5;
  return s;
}

void transformation_theorems(Check &c, Paths const &)
{
  std::uint64_t seed = 104;
  for (auto id : {TheoremId::Apathy, TheoremId::Delegation, TheoremId::DelegationCorollary, TheoremId::Herding,
                  TheoremId::Slates, TheoremId::Bribery})
  {
    gen::Gen g(seed++);
    int      held = 0;
    for (int attempt = 0; held < kThousand && attempt < kThousand * 100; ++attempt)
    {
      auto k = gen::theorem_case(g, id);
      auto v = check_theorem(k.s, k.t, id);
      c.expect(v.precondition_held == k.precondition, std::string(to_string(id)) + ": precondition disagrees with oracle");
      if (!k.precondition)
        continue;
      ++held;
      auto const after = vbe::apply(k.s, k.t).scenario;
      bool const claim = id == TheoremId::Delegation
                             ? oracle::vbe_min(k.s) <= oracle::vbe_min(after) + kFloatSlack
                             : oracle::vbe_min(k.s) + kFloatSlack >= oracle::vbe_min(after);
      c.expect(claim && v.claim_held == true, std::string(to_string(id)) + ": claim failed");
    }
    c.expect(held >= kThousand, std::string(to_string(id)) + ": only " + std::to_string(held) + " held instances");
  }

  auto const quarter = -std::log2(6.0 / 8.0);
  auto       a = check_theorem(apathy_instance(), MakeApathetic{{"u1"}}, TheoremId::Apathy);
  c.expect(std::fabs(a.vbe_before - 1.0) <= kHandSlack && std::fabs(a.vbe_after - quarter) <= kHandSlack,
           "apathy example");
  auto d = check_theorem(delegation_instance(), Delegation{{{"w1", "d1"}, {"w2", "d2"}}}, TheoremId::Delegation);
  c.expect(std::fabs(d.vbe_before - quarter) <= kHandSlack && std::fabs(d.vbe_after - 1.0) <= kHandSlack,
           "delegation example");
  c.note("1000 held instances for each of six theorems; apathy 1 -> " + std::to_string(a.vbe_after).substr(0, 5) +
         ", delegation " + std::to_string(d.vbe_before).substr(0, 5) + " -> 1");
}

// 5 -------------------------------------------------------------------------

Tally whale_tally(double whale)
{
  double const        rest = 50.0 - whale;
  std::vector<double> tokens{50.0, whale, rest * 2.0 / 3.0, rest / 3.0};
  std::vector<Vote>   votes{Vote::Abstain, Vote::False, Vote::True, Vote::False};
  return tally(tokens, votes, 0.5);
}

double two_places(double x) { return std::round(x * 100.0) / 100.0; }

void whale_example(Check &c, Paths const &)
{
  auto const big = whale_tally(12.6);
  c.expect(two_places(big.no) == 25.07 && two_places(big.yes) == 24.93, "12.6% tally");
  c.expect(big.abstained == 50.0 && big.quorum_met && !big.passed(), "12.6% outcome");
  auto const small = whale_tally(12.4);
  c.expect(small.quorum_met && small.passed(), "12.4% outcome");
  c.note("no " + std::to_string(two_places(big.no)).substr(0, 5) + " vs yes " +
         std::to_string(two_places(big.yes)).substr(0, 5) + " rejects; 12.4% passes");
}

// 6 -------------------------------------------------------------------------

void sybil_amplification(Check &c, Paths const &)
{
  double const f = quadratic_sybil_amplification(256, 64);
  c.expect(f == 8.0, "factor " + std::to_string(f));
  c.note("factor " + std::to_string(f).substr(0, 3));
}

// 7 -------------------------------------------------------------------------

void pivotal(Check &c, Paths const &)
{
  double const eps = 0.01;
  for (int n = 3; n <= 15; n += 2)
  {
    PivotalBribeGame g{n, 1.0, eps};
    auto             r = pivotal_dominance(g);
    c.expect(r.accepting_weakly_dominant, "n=" + std::to_string(n) + " not dominant");
    c.expect(r.minimum_margin >= eps - kFloatSlack, "n=" + std::to_string(n) + " margin");
    c.expect(r.profiles_checked == (1ull << n), "n=" + std::to_string(n) + " profiles");
    auto o = pivotal_bribe_evaluate(g, std::vector<bool>(static_cast<std::size_t>(n), true));
    c.expect(std::fabs(o.briber_cost - n * eps) <= kFloatSlack, "n=" + std::to_string(n) + " cost");
  }
  c.note("n = 3..15, all 2^n profiles; all-accept costs n*eps");
}

// 8 -------------------------------------------------------------------------

void scale_vs_vbe(Check &c, Paths const &)
{
  gen::Gen   g(108);
  auto const cl     = ClusteringSpec::epsilon_toc(gen::kEps);
  int        strict = 0;
  for (int trial = 0; trial < kThousand; ++trial)
  {
    int const n = g.uniform(1, 10), m = g.uniform(1, 4), total = g.uniform(1, 40);
    auto      before = g.scenario(n, m, total);
    auto      after  = before;
    for (auto &row : after.utilities)
      if (g.coin())
        row = g.row(m);
    auto const   b1 = bribery_scale(before, cl), b2 = bribery_scale(after, cl);
    double const o1 = oracle::blocs(before).largest(), o2 = oracle::blocs(after).largest();
    c.expect(b1.tokens_needed_raw == before.q * total - o1 && b2.players_needed == after.q * total / o2,
             "formula mismatch");
    bool const dropped = definitely_lt(oracle::vbe_min(after), oracle::vbe_min(before));
    c.expect(definitely_gt(b1.tokens_needed_raw, b2.tokens_needed_raw) == dropped, "token count");
    c.expect(definitely_gt(b1.players_needed, b2.players_needed) == dropped, "player count");
    strict += dropped;
  }
  c.expect(strict >= 100, "too few strict cases");
  c.note("1000 pairs, " + std::to_string(strict) + " with a strict drop");
}

// 9 -------------------------------------------------------------------------

QvInstance random_qv(gen::Gen &g, int n, int m)
{
  QvInstance q;
  q.linear = g.scenario(n, m);
  for (auto &p : q.linear.players)
    p.tokens = g.uniform(1, 30);
  for (auto &row : q.linear.utilities)
    for (auto &u : row)
      u = g.decisive_utility();
  q.quadratic_utilities = q.linear.utilities;
  for (auto &row : q.quadratic_utilities)
    if (g.coin(0.4))
      for (auto &u : row)
        u = g.decisive_utility() * 2.0;
  return q;
}

bool benefits(std::vector<double> const &t, std::size_t i)
{
  double lin = 0, sq = 0;
  for (double x : t)
  {
    lin += x;
    sq += std::sqrt(x);
  }
  return t[i] / lin < std::sqrt(t[i]) / sq - 1e-12;
}

void quadratic_voting(Check &c, Paths const &)
{
  gen::Gen g(109);
  int      with = 0, without = 0;
  for (int trial = 0; trial < 300; ++trial)
  {
    auto              q      = random_qv(g, g.uniform(1, 10), g.uniform(1, 3));
    auto const        tokens = q.linear.token_vector();
    std::size_t const n      = tokens.size();
    bool const        desired = g.coin();
    bool              gain_exists = false;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask)
    {
      std::vector<std::size_t> target;
      bool                     unchanged = true, any = false, all = true;
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (1u << i))
        {
          target.push_back(i);
          unchanged = unchanged && q.linear.utilities[i] == q.quadratic_utilities[i];
          any       = any || benefits(tokens, i);
          all       = all && benefits(tokens, i);
        }
      if (!unchanged)
        continue;
      auto r = qv_compare(q, target, desired);
      c.expect(r.linear.cost == r.quadratic.cost, "cost differs for unchanged targets");
      bool const gain = definitely_gt(r.quadratic.fraction, r.linear.fraction);
      c.expect(!all || gain, "beneficiary set without gain");
      c.expect(!gain || any, "gain without a beneficiary");
      gain_exists = gain_exists || gain;
    }
    bool const hat = !q.unchanged_beneficiaries().empty();
    c.expect(gain_exists == hat, "biconditional, trial " + std::to_string(trial));
    (hat ? with : without) += 1;
  }
  c.expect(with >= 30 && without >= 30, "unbalanced instances");

  int checked = 0;
  for (int trial = 0; trial < 40000 && checked < 300; ++trial)
  {
    auto       q      = random_qv(g, g.uniform(3, 10), g.uniform(1, 3));
    auto const tokens = q.linear.token_vector();
    for (std::size_t i = 0; i < tokens.size(); ++i)
      if (benefits(tokens, i))
      {
        for (auto &u : q.linear.utilities[i])
          u = -std::fabs(u);
        q.quadratic_utilities[i] = q.linear.utilities[i];
      }
    auto const hat = q.unchanged_beneficiaries();
    double     w   = 0;
    for (auto i : hat)
      w += tokens[i];
    if (!(w > q.linear.q * oracle::total(q.linear)))
      continue;
    ++checked;
    double const lin = divisible_budget_to_ensure(q.linear, hat, true, WeightingMode::Linear);
    double const qd  = divisible_budget_to_ensure(q.quadratic(), hat, true, WeightingMode::Quadratic);
    c.expect(std::isfinite(lin) && definitely_lt(qd, lin), "budget did not fall");
  }
  c.expect(checked >= 300, "only " + std::to_string(checked) + " budget instances");
  c.note("300 instances over all target subsets (n <= 10); divisible budget fell on " + std::to_string(checked));
}

// 10 ------------------------------------------------------------------------

using Grouping = std::set<std::set<std::string>>;

void estimation(Check &c, Paths const &)
{
  gen::Gen g(110);
  for (int trial = 0; trial < kThousand; ++trial)
  {
    auto        s = g.scenario(g.uniform(1, 12), g.uniform(1, 6), g.uniform(1, 60));
    std::string balances = "voter,tokens\n";
    for (auto const &p : s.players)
      balances += p.id + "," + std::to_string(static_cast<int>(p.tokens)) + "\n";
    auto h = parse_history(history_votes_csv(history_from_scenario(s)), balances);
    auto e = estimate_vbe(h, EntropySpec::min());

    Grouping got;
    for (auto const &b : e.partition.blocs)
    {
      std::set<std::string> ids;
      for (auto i : b)
        ids.insert(e.ordinal.voters[i]);
      got.insert(ids);
    }
    auto const                                   ob = oracle::blocs(s);
    std::map<std::string, std::set<std::string>> by_key;
    for (std::size_t i = 0; i < s.players.size(); ++i)
      by_key[ob.key_of[i]].insert(s.players[i].id);
    Grouping want;
    for (auto &[k, ids] : by_key)
      want.insert(ids);
    c.expect(got == want, "partition, trial " + std::to_string(trial));
    c.expect(e.bits == vbe_min(s) && std::fabs(e.bits - oracle::vbe_min(s)) <= kSybilSlack,
             "vbe, trial " + std::to_string(trial));
  }
  c.note("1000 histories");
}

// 11 ------------------------------------------------------------------------

void dark_dao_script(Check &c, Paths const &p)
{
  auto const script = json::parse(slurp(p.data + "/basic.json"));
  auto const run    = run_script(script, 7);
  c.expect(run.mismatches == 0, std::to_string(run.mismatches) + " script mismatches");
  std::set<std::string> ops, expected_codes, codes;
  for (auto const &s : run.report["steps"])
  {
    if (s["ok"].get<bool>())
      ops.insert(s["op"].get<std::string>());
    else
      codes.insert(s["error"].get<std::string>());
  }
  for (auto const &s : script["steps"])
    if (s.contains("expect_error"))
      expected_codes.insert(s["expect_error"].get<std::string>());
  for (auto const *op : {"keygen", "sign", "register_bribe", "take_bribe", "sign_via_encumbered_key"})
    c.expect(ops.count(op) == 1, std::string("operation never succeeded: ") + op);
  c.expect(codes == expected_codes && codes.size() >= 10, "error codes are not distinct per assertion");

  // The same properties, asserted directly.
  DarkDao dao(7);
  dao.fund("briber", 100);
  auto pk  = dao.keygen("alice");
  auto bid = dao.register_bribe("briber", 10, {"prop", {"vote"}}, 30);
  c.expect(dao.take_bribe("alice", pk, bid) == 10 && dao.funds("alice") == 10, "bribe not paid");
  c.expect(dao.bribe(bid).pool == 20 && dao.bribe(bid).paid == 10 && dao.funds("briber") == 70, "pool accounting");
  c.expect(code_of([&] { dao.sign("alice", pk, vote("prop", "no")); }) == ErrorCode::MessageRestricted,
           "restricted message signed by owner");
  auto const s1 = dao.sign_via_encumbered_key("briber", pk, vote("prop", "yes"), bid);
  c.expect(dao.verify(pk, vote("prop", "yes"), s1), "briber signature does not verify");
  auto const s2 = dao.sign("alice", pk, vote("other", "no"));
  c.expect(dao.verify(pk, vote("other", "no"), s2), "unrestricted message refused to owner");
  c.expect(code_of([&] { dao.sign_via_encumbered_key("briber", pk, vote("other", "no"), bid); }) ==
               ErrorCode::MessageOutsideScope,
           "briber signed outside scope");
  c.note("script of " + std::to_string(run.report["steps"].size()) + " steps, " + std::to_string(codes.size()) +
         " distinct error codes");
}

// 12 ------------------------------------------------------------------------

void pre_signing(Check &c, Paths const &)
{
  int signs = 0;
  for (std::uint64_t enroll = 1; enroll <= 100; ++enroll)
  {
    DarkDao dao(enroll, EncumbrancePolicy::Anchored);
    dao.fund("briber", 10);
    dao.advance(enroll - 1);
    auto pk = dao.keygen("alice");
    c.expect(dao.now() == enroll, "enrollment clock");
    auto bid = dao.register_bribe("briber", 1, {"prop", {"vote"}}, 1);
    dao.take_bribe("alice", pk, bid);
    for (std::uint64_t anchor = 0; anchor < 100; ++anchor)
    {
      auto m = vote("prop", "yes", anchor);
      bool const before = anchor <= enroll;
      auto const code   = code_of([&] { dao.sign("alice", pk, m); });
      c.expect(before ? !code : code == ErrorCode::MessageRestricted,
               "enroll " + std::to_string(enroll) + " anchor " + std::to_string(anchor));
      c.expect(policy_restricts(m, enroll).restricted == !before, "policy grid");
      ++signs;
    }
  }
  c.note(std::to_string(signs) + " owner signing attempts over 100 enrollment times");
}

// 13 ------------------------------------------------------------------------

void dd_token(Check &c, Paths const &)
{
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
  {
    std::mt19937_64 rng(seed);
    auto            pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    SignatureScheme scheme{seed};
    auto            dd = scheme.keygen();
    DDToken         token(scheme, dd.pk);
    std::vector<std::pair<MintAuthorization, std::string>> issued;
    std::vector<Party> parties{"a", "b", "c"};
    Amount             mints = 0, burns = 0;
    int                replays = 0;
    for (int step = 0; step < 50; ++step)
    {
      auto const &p = parties[static_cast<std::size_t>(pick(0, 2))];
      try
      {
        switch (pick(0, 3))
        {
        case 0:
        {
          MintAuthorization m{pick(1, 20), static_cast<std::uint64_t>(issued.size()), p};
          issued.push_back({m, SignatureScheme::sign(dd, m.encode())});
          token.mint(p, m, issued.back().second);
          mints += m.amount;
          break;
        }
        case 1:
          if (!issued.empty())
          {
            auto const &[m, sig] = issued[static_cast<std::size_t>(pick(0, static_cast<int>(issued.size()) - 1))];
            c.expect(code_of([&] { token.mint(m.recipient, m, sig); }) == ErrorCode::ReplayedNonce,
                     "replayed authorization accepted");
            ++replays;
          }
          break;
        case 2:
        {
          Amount const amt = pick(1, 15);
          token.burn(p, amt);
          burns += amt;
          break;
        }
        default:
          token.transfer(p, parties[static_cast<std::size_t>(pick(0, 2))], pick(0, 10));
        }
      }
      catch (ProtocolError const &)
      {
      }
      Amount held = 0;
      for (auto const &q : parties)
        held += token.balance(q);
      c.expect(token.supply() == mints - burns && held == token.supply(), "supply drifted");
    }
    c.expect(replays > 0 || issued.empty(), "no replay attempted");
  }
  c.note("20 seeds x 50 steps");
}

// 14 ------------------------------------------------------------------------

void withdrawal_race(Check &c, Paths const &)
{
  for (int k : {2, 3, 5})
  {
    std::string const tag = "k=" + std::to_string(k) + ": ";
    SignatureScheme   scheme{static_cast<std::uint64_t>(k)};
    Ledger            ledger{scheme};
    DarkDaoLite       lite(scheme, ledger, LiteConfig{});
    auto              whale = scheme.keygen();
    ledger.mint(whale.pk, "DAO", 100);
    ledger.produce_block();
    auto addr = lite.get_deposit_address();
    auto dep  = ledger.submit(make_transaction(whale, 0, Transfer{addr.pk, "DAO", 100, ""}));
    ledger.produce_block({{dep}});
    auto r = lite.deposit_and_mint({*ledger.proof_for(dep), addr.encrypted_key}, "whale");
    lite.token().mint("whale", r.mint->authorization, r.mint->signature);

    std::vector<KeyPair>      users;
    std::vector<RedeemResult> reqs;
    std::vector<TxId>         ids;
    for (int i = 0; i < k; ++i)
    {
      auto const name = "u" + std::to_string(i);
      users.push_back(scheme.keygen());
      lite.token().transfer("whale", name, 10);
      reqs.push_back(lite.redeem_and_withdraw(lite.token().burn(name, 10), users.back().pk));
      c.expect(reqs.back().transactions.size() == 1 && reqs.back().transactions[0].nonce == 0, tag + "slot");
      ids.push_back(ledger.submit(reqs.back().transactions[0]));
    }
    auto block = ledger.produce_block();
    int  included = 0, invalidated = 0;
    std::size_t winner = 0;
    for (std::size_t i = 0; i < ids.size(); ++i)
    {
      auto rc = block.receipt(ids[i]);
      if (rc && rc->status == TxStatus::Included)
      {
        ++included;
        winner = i;
      }
      invalidated += rc && rc->status == TxStatus::Invalidated;
    }
    c.expect(included == 1 && invalidated == k - 1, tag + "outcome");
    c.expect(ledger.balance(addr.pk, "DAO") == 90, tag + "losers were charged");
    for (std::size_t i = 0; i < users.size(); ++i)
      c.expect(ledger.balance(users[i].pk, "DAO") == (i == winner ? 10 : 0), tag + "payout");

    std::size_t const loser = winner == 0 ? 1 : 0;
    c.expect(lite.withdrawal_transactions(reqs[loser].request_id)[0].nonce == 0 && lite.account_nonce(addr.pk) == 0,
             tag + "queue advanced before proof");
    lite.confirm_withdrawal(*ledger.proof_for(ids[winner]));
    c.expect(lite.account_nonce(addr.pk) == 1 && lite.withdrawal_transactions(reqs[loser].request_id)[0].nonce == 1,
             tag + "queue did not advance on proof");
  }
  c.note("k = 2, 3, 5: one included, the rest invalidated");
}

// 15 ------------------------------------------------------------------------

void enumeration(Check &c, Paths const &)
{
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
  {
    AttackConfig lifo;
    lifo.seed   = seed;
    auto a      = enumeration_attack(lifo);
    auto b      = enumeration_attack(lifo);
    c.expect(a.rate == 1.0 && a.linked.size() == a.victim_addresses.size(), "LIFO, seed " + std::to_string(seed));
    c.expect(a.ledger_head == b.ledger_head && a.ledger_events == b.ledger_events && a.linked == b.linked,
             "replay differs");
    AttackConfig fifo = lifo;
    fifo.order        = WithdrawalOrder::Fifo;
    fifo.lockup       = fifo.window;
    auto f            = enumeration_attack(fifo);
    c.expect(f.rate == 0.0 && f.linked.empty(), "FIFO, seed " + std::to_string(seed));
  }
  c.note("10 seeds: LIFO links 100%, FIFO with lockup 0%");
}

// 16 ------------------------------------------------------------------------

std::pair<int, std::string> run_cli(std::string const &cmd)
{
  std::string out;
  FILE       *pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!pipe)
    return {-1, out};
  char   buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0)
    out.append(buf, n);
  int const status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

void cli_determinism(Check &c, Paths const &p)
{
  if (p.cli.empty() || p.data.empty() || p.work.empty())
  {
    c.expect(false, "--cli, --data and --work are required");
    return;
  }
  std::filesystem::create_directories(p.work);
  {
    std::ofstream(p.work + "/votes.csv") << "voter,election,vote\nA,e1,true\nB,e1,true\nC,e1,false\nA,e2,false\n";
    std::ofstream(p.work + "/balances.csv") << "voter,tokens\nA,4\nB,2\nC,2\n";
  }
  std::string const cli = "'" + p.cli + "' ";
  std::string const d   = p.data + "/";
  std::vector<std::string> commands{
      "vbe compute --scenario " + d + "apathy.json",
      "vbe compute --scenario " + d + "apathy.json --entropy shannon --clustering solo",
      "vbe estimate --votes " + p.work + "/votes.csv --balances " + p.work + "/balances.csv",
      "transform apply --scenario " + d + "apathy.json --transform " + d + "make_apathetic.json",
      "theorems check --scenario " + d + "apathy.json --transform " + d + "bribe_u3.json --theorem 7",
      "bribery scale --scenario " + d + "apathy.json",
      "bribery flip-cost --utility -3 --epsilon 0.1",
      "bribery pivotal --n 7 --utility 1 --epsilon 0.01",
      "bribery qv --tokens 256 --accounts 64",
  };
  for (auto const *script : {"basic", "lite", "attack"})
    commands.push_back("darkdao run " + d + script + ".json --seed 5 --out " + p.work + "/" + script);

  int runs = 0;
  for (auto const &cmd : commands)
  {
    auto const out_dir = cmd.find("--out ") == std::string::npos ? "" : cmd.substr(cmd.find("--out ") + 6);
    auto read_outputs  = [&] {
      std::string all;
      if (!out_dir.empty())
        for (auto const *f : {"/public.jsonl", "/confidential.jsonl", "/report.json"})
          all += slurp(out_dir + f) + "\x1e";
      return all;
    };
    auto const [rc1, out1] = run_cli(cli + cmd);
    auto const files1      = read_outputs();
    auto const [rc2, out2] = run_cli(cli + cmd);
    auto const files2      = read_outputs();
    c.expect(rc1 == 0 && rc2 == 0, cmd + ": exit " + std::to_string(rc1));
    c.expect(!out1.empty() && out1 == out2 && files1 == files2, cmd + ": output differs");
    runs += 2;
  }
  c.note(std::to_string(runs) + " invocations, byte-identical in pairs");
}

}  // namespace

int main(int argc, char **argv)
{
  Paths p;
  for (int i = 1; i + 1 < argc; i += 2)
  {
    std::string const flag = argv[i];
    if (flag == "--cli")
      p.cli = argv[i + 1];
    else if (flag == "--data")
      p.data = argv[i + 1];
    else if (flag == "--work")
      p.work = argv[i + 1];
    else
    {
      std::cerr << "unknown flag " << flag << "\n";
      return 1;
    }
  }

  std::vector<std::pair<std::string, std::function<void(Check &, Paths const &)>>> criteria{
      {"master theorem biconditional", master_theorem},
      {"solo clustering bounds the partition", solo_bound},
      {"sybil splits preserve VBE", sybil_invariance},
      {"transformation theorems", transformation_theorems},
      {"whale tally example", whale_example},
      {"quadratic sybil amplification", sybil_amplification},
      {"pivotal bribery", pivotal},
      {"bribery scale moves against VBE", scale_vs_vbe},
      {"quadratic voting bribery", quadratic_voting},
      {"estimation round trip", estimation},
      {"dark DAO state machine", dark_dao_script},
      {"pre-signing defense", pre_signing},
      {"DD token supply", dd_token},
      {"withdrawal race", withdrawal_race},
      {"enumeration attack", enumeration},
      {"CLI determinism", cli_determinism},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i)
  {
    Check c;
    try
    {
      criteria[i].second(c, p);
    }
    catch (std::exception const &e)
    {
      c.expect(false, std::string("exception: ") + e.what());
    }
    failed += !c.ok();
    std::cout << (c.ok() ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << c.summary()
              << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
