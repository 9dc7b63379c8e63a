#pragma once

// Interpreter for Dark DAO simulation scripts:
//   {"protocol": "basic"|"lite", "policy": ..., "lite": {...}, "steps": [...]}
// Each step names an op; "as" binds its result to a name later steps use, and
// "expect_error" asserts the step fails with that error code.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "vbe/darkdao.hpp"
#include "vbe/darkdao_lite.hpp"
#include "vbe/ledger.hpp"
#include "vbe/scenario_json.hpp"

namespace vbe {

struct ScriptRun
{
  ojson              report;          ///< per-step outcomes and final state
  std::vector<ojson> public_log;
  std::vector<ojson> confidential_log;
  int                mismatches = 0;  ///< steps whose outcome contradicted "expect_error"
};

namespace detail {

inline std::string jsonl(std::vector<ojson> const &lines)
{
  std::string out;
  for (auto const &l : lines)
    out += l.dump() + "\n";
  return out;
}

inline std::string str(json const &step, char const *key)
{
  return require_string(require(step, key, step.value("op", "step")), key);
}

inline std::int64_t integer(json const &step, char const *key)
{
  auto const &v = require(step, key, step.value("op", "step"));
  if (!v.is_number_integer())
    throw InputError(std::string(key) + ": expected an integer");
  return v.get<std::int64_t>();
}

inline Message message_from_json(json const &j)
{
  reject_unknown_keys(j, {"proposal", "kind", "body", "anchor"}, "message");
  Message m;
  m.proposal_hash = require_string(require(j, "proposal", "message"), "message.proposal");
  m.kind          = j.contains("kind") ? require_string(j["kind"], "message.kind") : "vote";
  m.body          = j.contains("body") ? require_string(j["body"], "message.body") : "";
  if (j.contains("anchor") && !j["anchor"].is_null())
  {
    if (!j["anchor"].is_number_unsigned())
      throw InputError("message.anchor: expected a non-negative integer");
    m.anchor = j["anchor"].get<std::uint64_t>();
  }
  return m;
}

inline WithdrawalOrder parse_order(std::string const &s)
{
  if (s == "fifo")
    return WithdrawalOrder::Fifo;
  if (s == "lifo")
    return WithdrawalOrder::Lifo;
  throw InputError("unknown withdrawal order '" + s + "'");
}

class BasicRunner
{
public:
  BasicRunner(std::uint64_t seed, EncumbrancePolicy policy) : dao_(seed, policy) {}

  ojson step(json const &s)
  {
    auto const op = str(s, "op");
    ojson      r = ojson::object();
    if (op == "fund")
    {
      reject_unknown_keys(s, {"op", "party", "amount", "expect_error"}, op);
      dao_.fund(str(s, "party"), integer(s, "amount"));
    }
    else if (op == "advance")
    {
      reject_unknown_keys(s, {"op", "ticks"}, op);
      dao_.advance(static_cast<std::uint64_t>(integer(s, "ticks")));
    }
    else if (op == "keygen")
    {
      reject_unknown_keys(s, {"op", "party", "as", "expect_error"}, op);
      auto pk = dao_.keygen(str(s, "party"));
      keys_[str(s, "as")] = pk;
      r["pk"]             = pk;
    }
    else if (op == "sign")
    {
      reject_unknown_keys(s, {"op", "party", "key", "message", "as", "expect_error"}, op);
      auto m   = message_from_json(require(s, "message", op));
      auto sig = dao_.sign(str(s, "party"), key(s), m);
      bind(s, m, key(s), sig);
      r["signature"] = sig;
    }
    else if (op == "register_bribe")
    {
      reject_unknown_keys(s, {"op", "briber", "amount", "proposal", "kinds", "deposit", "as", "expect_error"}, op);
      RestrictedClass rc{str(s, "proposal"), {}};
      if (s.contains("kinds"))
        for (auto const &k : s["kinds"])
          rc.kinds.insert(require_string(k, "kinds[]"));
      auto id = dao_.register_bribe(str(s, "briber"), integer(s, "amount"), rc, integer(s, "deposit"));
      bribes_[str(s, "as")] = id;
      r["bribe_id"]         = id;
    }
    else if (op == "take_bribe")
    {
      reject_unknown_keys(s, {"op", "party", "key", "bribe", "expect_error"}, op);
      r["paid"] = dao_.take_bribe(str(s, "party"), key(s), bribe(s));
    }
    else if (op == "sign_via_encumbered_key")
    {
      reject_unknown_keys(s, {"op", "briber", "key", "message", "bribe", "as", "expect_error"}, op);
      auto m   = message_from_json(require(s, "message", op));
      auto sig = dao_.sign_via_encumbered_key(str(s, "briber"), key(s), m, bribe(s));
      bind(s, m, key(s), sig);
      r["signature"] = sig;
    }
    else if (op == "verify")
    {
      reject_unknown_keys(s, {"op", "signature"}, op);
      auto it = sigs_.find(str(s, "signature"));
      if (it == sigs_.end())
        throw InputError("unknown signature binding '" + str(s, "signature") + "'");
      r["valid"] = dao_.verify(it->second.pk, it->second.m, it->second.sig);
    }
    else
      throw InputError("basic script: unknown op '" + op + "'");
    return r;
  }

  void failure(std::string const &op, ErrorCode c) { dao_.log_failure(op, c); }

  ojson state() const
  {
    ojson j;
    j["clock"]    = dao_.now();
    j["warnings"] = dao_.warnings();
    ojson bribes  = ojson::object();
    for (auto const &[name, id] : bribes_)
    {
      auto const &b = dao_.bribe(id);
      bribes[name]  = {{"id", id}, {"amount", b.amount}, {"pool", b.pool}, {"paid", b.paid}, {"deposited", b.deposited}};
    }
    j["bribes"] = bribes;
    return j;
  }

  std::vector<ojson> const &public_log() const { return dao_.public_log(); }
  std::vector<ojson> const &confidential_log() const { return dao_.confidential_log(); }

private:
  struct BoundSig
  {
    std::string pk;
    Message     m;
    std::string sig;
  };

  std::string key(json const &s) const
  {
    auto name = str(s, "key");
    auto it   = keys_.find(name);
    if (it == keys_.end())
      throw InputError("unknown key binding '" + name + "'");
    return it->second;
  }

  std::uint64_t bribe(json const &s) const
  {
    auto name = str(s, "bribe");
    auto it   = bribes_.find(name);
    if (it == bribes_.end())
      throw InputError("unknown bribe binding '" + name + "'");
    return it->second;
  }

  void bind(json const &s, Message const &m, std::string const &pk, std::string const &sig)
  {
    if (s.contains("as"))
      sigs_[str(s, "as")] = {pk, m, sig};
  }

  DarkDao                              dao_;
  std::map<std::string, std::string>   keys_;
  std::map<std::string, std::uint64_t> bribes_;
  std::map<std::string, BoundSig>      sigs_;
};

class LiteRunner
{
public:
  LiteRunner(std::uint64_t seed, LiteConfig cfg, LedgerConfig lcfg)
      : seed_(seed), scheme_(seed), ledger_(scheme_, lcfg), lite_(scheme_, ledger_, cfg)
  {
  }

  ojson step(json const &s)
  {
    auto const op = str(s, "op");
    ojson      r = ojson::object();
    if (op == "mint_dao")
    {
      reject_unknown_keys(s, {"op", "party", "amount"}, op);
      ledger_.mint(party(str(s, "party")).pk, lite_.config().dao_asset, integer(s, "amount"));
    }
    else if (op == "advance")
    {
      reject_unknown_keys(s, {"op", "blocks"}, op);
      for (std::int64_t i = 0; i < integer(s, "blocks"); ++i)
        ledger_.produce_block({});
    }
    else if (op == "transfer")
    {
      // A plain DAO-token transfer to a fresh address, for comparison with deposits.
      reject_unknown_keys(s, {"op", "party", "amount"}, op);
      auto const &from = party(str(s, "party"));
      auto        to   = scheme_.keygen();
      auto id = ledger_.submit(make_transaction(from, ledger_.nonce(from.pk),
                                                Transfer{to.pk, lite_.config().dao_asset, integer(s, "amount"), ""}));
      ledger_.produce_block({{id}});
      r["to"] = to.pk;
    }
    else if (op == "deposit")
    {
      reject_unknown_keys(s, {"op", "party", "amount", "as", "expect_error"}, op);
      auto const &from = party(str(s, "party"));
      auto        addr = lite_.get_deposit_address();
      auto id = ledger_.submit(make_transaction(from, ledger_.nonce(from.pk),
                                                Transfer{addr.pk, lite_.config().dao_asset, integer(s, "amount"), ""}));
      ledger_.produce_block({{id}});
      DepositProof proof{*ledger_.proof_for(id), addr.encrypted_key};
      auto         res = lite_.deposit_and_mint(proof, str(s, "party"));
      if (res.mint)
        lite_.token().mint(str(s, "party"), res.mint->authorization, res.mint->signature);
      if (s.contains("as"))
        deposits_[str(s, "as")] = {res.deposit_id, proof, str(s, "party")};
      r["deposit_id"] = res.deposit_id;
      r["minted"]     = res.mint.has_value();
    }
    else if (op == "replay_deposit_proof")
    {
      reject_unknown_keys(s, {"op", "deposit", "expect_error"}, op);
      auto const &d = deposit(s);
      lite_.deposit_and_mint(d.proof, d.party);
    }
    else if (op == "mint")
    {
      // Fetches the deposit's authorization and presents it to the token.
      reject_unknown_keys(s, {"op", "deposit", "expect_error"}, op);
      auto const &d = deposit(s);
      auto        m = lite_.mint_authorization(d.id);
      lite_.token().mint(d.party, m.authorization, m.signature);
      r["amount"] = m.authorization.amount;
    }
    else if (op == "burn")
    {
      reject_unknown_keys(s, {"op", "party", "amount", "as", "expect_error"}, op);
      auto p = lite_.token().burn(str(s, "party"), integer(s, "amount"));
      burns_[str(s, "as")] = p;
      r["receipt"]         = p.receipt_id;
    }
    else if (op == "redeem")
    {
      reject_unknown_keys(s, {"op", "party", "burn", "as", "expect_error"}, op);
      auto res = lite_.redeem_and_withdraw(burn(s), party(str(s, "party")).pk);
      requests_[str(s, "as")] = {res.request_id, res.transactions};
      r["request_id"]         = res.request_id;
      r["transactions"]       = describe(res.transactions);
    }
    else if (op == "reissue")
    {
      reject_unknown_keys(s, {"op", "request", "expect_error"}, op);
      auto &q = request(s);
      q.txs   = lite_.withdrawal_transactions(q.id);
      r["transactions"] = describe(q.txs);
    }
    else if (op == "include")
    {
      // Submits the named requests' transactions and produces one block in
      // the listed order.
      reject_unknown_keys(s, {"op", "requests"}, op);
      std::vector<Ledger::OrderingEntry> ordering;
      for (auto const &name : require(s, "requests", op))
        for (auto const &tx : request(json{{"request", name}}).txs)
        {
          auto id = tx.id();
          if (!ledger_.is_pending(id) && !ledger_.proof_for(id))
            ledger_.submit(tx);
          if (ledger_.is_pending(id))
            ordering.push_back(Ledger::OrderingEntry{id});
        }
      auto res = ledger_.produce_block(ordering);
      ojson receipts = ojson::array();
      for (auto const &rc : res.receipts)
        receipts.push_back({{"tx", rc.tx_id}, {"status", to_string(rc.status)}, {"reason", rc.reason}});
      r["height"]   = res.height;
      r["receipts"] = receipts;
    }
    else if (op == "confirm")
    {
      reject_unknown_keys(s, {"op", "request", "expect_error"}, op);
      auto &q         = request(s);
      int   confirmed = 0;
      for (auto const &tx : q.txs)
        if (auto p = ledger_.proof_for(tx.id()))
        {
          lite_.confirm_withdrawal(*p);
          ++confirmed;
        }
      if (confirmed == 0)
        throw ProtocolError(ErrorCode::InvalidProof, "no transaction of the request is included");
      r["confirmed"] = confirmed;
      r["remaining"] = lite_.request_remaining(q.id);
    }
    else if (op == "auction_create")
    {
      reject_unknown_keys(s, {"op", "proposal", "end", "expiry", "as", "expect_error"}, op);
      auto id = lite_.auction_create(str(s, "proposal"), static_cast<std::uint64_t>(integer(s, "end")),
                                     static_cast<std::uint64_t>(integer(s, "expiry")));
      auctions_[str(s, "as")] = id;
      r["auction_id"]          = id;
    }
    else if (op == "bid")
    {
      reject_unknown_keys(s, {"op", "auction", "bidder", "amount", "expect_error"}, op);
      lite_.auction_bid(auction(s), str(s, "bidder"), integer(s, "amount"));
    }
    else if (op == "settle")
    {
      reject_unknown_keys(s, {"op", "auction", "expect_error"}, op);
      r["winner"] = lite_.auction_settle(auction(s));
      r["price"]  = lite_.auction_view(auction(s)).price;
    }
    else if (op == "sign_votes")
    {
      reject_unknown_keys(s, {"op", "auction", "party", "choice", "expect_error"}, op);
      auto sigs      = lite_.sign_votes_for_winner(auction(s), str(s, "party"), str(s, "choice"));
      r["signatures"] = sigs.size();
    }
    else if (op == "attack")
    {
      reject_unknown_keys(s, {"op", "order", "budget", "victims", "victim_amount", "window", "lockup"}, op);
      AttackConfig c;
      c.order         = parse_order(s.value("order", std::string("lifo")));
      c.budget        = s.value("budget", std::int64_t{1});
      c.victims       = s.value("victims", 10);
      c.victim_amount = s.value("victim_amount", std::int64_t{1});
      c.window        = s.value("window", std::uint64_t{50});
      c.lockup        = s.value("lockup", std::uint64_t{0});
      c.seed          = seed_;
      auto rep        = enumeration_attack(c);
      r["victims"]     = rep.victim_addresses.size();
      r["linked"]      = rep.linked;
      r["rate"]        = rep.rate;
      r["redemptions"] = rep.redemptions;
      r["ledger_head"] = rep.ledger_head;
    }
    else
      throw InputError("lite script: unknown op '" + op + "'");
    return r;
  }

  void failure(std::string const &op, ErrorCode c)
  {
    failures_.push_back({{"t", lite_.now()}, {"op", op}, {"error", to_string(c)}});
  }

  ojson state() const
  {
    ojson j;
    j["height"]        = ledger_.height();
    j["dd_supply"]     = lite_.token().supply();
    j["dd_minted"]     = lite_.token().minted();
    j["dd_burned"]     = lite_.token().burned();
    j["tracked_total"] = lite_.tracked_total();
    j["revenue"]       = lite_.revenue();
    j["ledger_head"]   = ledger_.blocks().empty() ? "" : ledger_.blocks().back().hash;
    return j;
  }

  std::vector<ojson> public_log() const
  {
    std::vector<ojson> out;
    for (auto const &b : ledger_.blocks())
      for (auto const &e : b.events)
      {
        ojson line = {{"chain", "ledger"}, {"height", b.height}};
        for (auto it = e.begin(); it != e.end(); ++it)
          line[it.key()] = it.value();
        out.push_back(std::move(line));
      }
    for (auto const &e : lite_.public_log())
    {
      ojson line = {{"chain", "lite"}};
      for (auto it = e.begin(); it != e.end(); ++it)
        line[it.key()] = it.value();
      out.push_back(std::move(line));
    }
    return out;
  }

  std::vector<ojson> confidential_log() const
  {
    auto out = lite_.confidential_log();
    out.insert(out.end(), failures_.begin(), failures_.end());
    return out;
  }

private:
  struct NamedDeposit
  {
    std::uint64_t id = 0;
    DepositProof  proof;
    Party         party;
  };
  struct NamedRequest
  {
    std::uint64_t            id = 0;
    std::vector<Transaction> txs;
  };

  KeyPair const &party(Party const &p)
  {
    auto it = parties_.find(p);
    if (it == parties_.end())
      it = parties_.emplace(p, scheme_.keygen()).first;
    return it->second;
  }

  static ojson describe(std::vector<Transaction> const &txs)
  {
    ojson out = ojson::array();
    for (auto const &tx : txs)
      out.push_back({{"tx", tx.id()},
                     {"sender", tx.sender},
                     {"nonce", tx.nonce},
                     {"amount", std::get<Transfer>(tx.payload).amount}});
    return out;
  }

  template <class Map>
  static auto &lookup(Map &m, json const &s, char const *key)
  {
    auto name = str(s, key);
    auto it   = m.find(name);
    if (it == m.end())
      throw InputError(std::string("unknown ") + key + " binding '" + name + "'");
    return it->second;
  }

  NamedDeposit const &deposit(json const &s) { return lookup(deposits_, s, "deposit"); }
  NamedRequest       &request(json const &s) { return lookup(requests_, s, "request"); }
  BurnProof const    &burn(json const &s) { return lookup(burns_, s, "burn"); }
  std::uint64_t       auction(json const &s) { return lookup(auctions_, s, "auction"); }

  std::uint64_t                        seed_;
  SignatureScheme                      scheme_;
  Ledger                               ledger_;
  DarkDaoLite                          lite_;
  std::map<Party, KeyPair>             parties_;
  std::map<std::string, NamedDeposit>  deposits_;
  std::map<std::string, NamedRequest>  requests_;
  std::map<std::string, BurnProof>     burns_;
  std::map<std::string, std::uint64_t> auctions_;
  std::vector<ojson>                   failures_;
};

template <class Runner>
ScriptRun run_steps(Runner &runner, json const &steps)
{
  ScriptRun out;
  ojson     results = ojson::array();
  int       index   = 0;
  for (auto const &s : steps)
  {
    if (!s.is_object())
      throw InputError("script step " + std::to_string(index) + ": expected an object");
    ojson line;
    line["step"] = index++;
    line["op"]   = require_string(require(s, "op", "step"), "op");
    std::optional<std::string> expected;
    if (s.contains("expect_error"))
      expected = require_string(s["expect_error"], "expect_error");
    try
    {
      line["result"] = runner.step(s);
      line["ok"]     = true;
    }
    catch (ProtocolError const &e)
    {
      runner.failure(line["op"].template get<std::string>(), e.code());
      line["ok"]    = false;
      line["error"] = to_string(e.code());
    }
    bool const matched = expected ? (!line["ok"].template get<bool>() && line["error"] == *expected)
                                  : line["ok"].template get<bool>();
    if (!matched)
      ++out.mismatches;
    line["as_expected"] = matched;
    results.push_back(std::move(line));
  }
  out.report["steps"]      = std::move(results);
  out.report["state"]      = runner.state();
  out.report["mismatches"] = out.mismatches;
  out.public_log           = runner.public_log();
  out.confidential_log     = runner.confidential_log();
  return out;
}

}  // namespace detail

inline ScriptRun run_script(json const &script, std::uint64_t seed)
{
  using namespace detail;
  reject_unknown_keys(script, {"protocol", "policy", "lite", "ledger", "steps"}, "script");
  auto const  protocol = str(script, "protocol");
  auto const &steps    = require(script, "steps", "script");
  if (!steps.is_array())
    throw InputError("script.steps: expected an array");

  if (protocol == "basic")
  {
    auto const policy = script.value("policy", std::string("plain"));
    if (policy != "plain" && policy != "anchored")
      throw InputError("script.policy: expected plain or anchored");
    BasicRunner r(seed, policy == "anchored" ? EncumbrancePolicy::Anchored : EncumbrancePolicy::Plain);
    return run_steps(r, steps);
  }
  if (protocol == "lite")
  {
    LiteConfig cfg;
    if (script.contains("lite"))
    {
      auto const &l = script["lite"];
      reject_unknown_keys(l, {"lockup", "order", "dao_asset"}, "script.lite");
      cfg.lockup    = l.value("lockup", std::uint64_t{0});
      cfg.order     = parse_order(l.value("order", std::string("fifo")));
      cfg.dao_asset = l.value("dao_asset", std::string("DAO"));
    }
    LedgerConfig lcfg;
    if (script.contains("ledger"))
    {
      auto const &l = script["ledger"];
      reject_unknown_keys(l, {"fee", "native_asset"}, "script.ledger");
      lcfg.fee          = l.value("fee", std::int64_t{0});
      lcfg.native_asset = l.value("native_asset", std::string("ETH"));
    }
    LiteRunner r(seed, cfg, lcfg);
    return run_steps(r, steps);
  }
  throw InputError("script.protocol: expected basic or lite");
}

}  // namespace vbe
