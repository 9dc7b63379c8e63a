#pragma once

// Deterministic account-based ledger: per-sender nonces, multi-asset
// balances, blocks with explicit ordering, a SHA-256 hash chain, events and
// inclusion proofs.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vbe/crypto.hpp"

namespace vbe {

using Address = std::string;
using Asset   = std::string;
using Amount  = std::int64_t;
using TxId    = std::string;

struct Transfer
{
  Address     to;
  Asset       asset;
  Amount      amount = 0;
  std::string memo;
};

/// An opaque contract call; the ledger charges the fee and records it.
struct Call
{
  std::string target;
  std::string data;
};

using Payload = std::variant<Transfer, Call>;

struct Transaction
{
  Address       sender;
  std::uint64_t nonce = 0;
  Payload       payload;
  std::string   signature;

  nlohmann::ordered_json body() const
  {
    nlohmann::ordered_json j;
    j["sender"] = sender;
    j["nonce"]  = nonce;
    if (auto const *t = std::get_if<Transfer>(&payload))
    {
      j["type"]   = "transfer";
      j["to"]     = t->to;
      j["asset"]  = t->asset;
      j["amount"] = t->amount;
      j["memo"]   = t->memo;
    }
    else
    {
      auto const &c = std::get<Call>(payload);
      j["type"]     = "call";
      j["target"]   = c.target;
      j["data"]     = c.data;
    }
    return j;
  }

  /// The bytes covered by the signature.
  std::string signing_message() const { return body().dump(); }

  TxId id() const { return sha256_hex(signing_message()); }
};

inline Transaction make_transaction(KeyPair const &k, std::uint64_t nonce, Payload payload)
{
  Transaction tx{k.pk, nonce, std::move(payload), {}};
  tx.signature = SignatureScheme::sign(k, tx.signing_message());
  return tx;
}

struct InclusionProof
{
  std::uint64_t height = 0;
  TxId          tx_id;

  bool operator<(InclusionProof const &o) const
  {
    return std::tie(height, tx_id) < std::tie(o.height, o.tx_id);
  }
  bool operator==(InclusionProof const &) const = default;
};

struct Block
{
  std::uint64_t          height = 0;
  std::string            prev_hash;
  std::string            hash;
  std::vector<TxId>      tx_ids;
  nlohmann::ordered_json events = nlohmann::ordered_json::array();
};

enum class TxStatus
{
  Included,
  Invalidated,  ///< lost a nonce race; dropped at no cost
  Deferred,     ///< nonce ahead of the sender's; stays pending
  Rejected,     ///< bad signature, insufficient funds, aborted bundle
};

inline const char *to_string(TxStatus s)
{
  switch (s)
  {
  case TxStatus::Included:
    return "included";
  case TxStatus::Invalidated:
    return "invalidated";
  case TxStatus::Deferred:
    return "deferred";
  case TxStatus::Rejected:
    return "rejected";
  }
  return "?";
}

struct TxReceipt
{
  TxId        tx_id;
  TxStatus    status = TxStatus::Rejected;
  std::string reason;
};

struct BlockResult
{
  std::uint64_t          height = 0;
  std::vector<TxReceipt> receipts;

  std::optional<TxReceipt> receipt(TxId const &id) const
  {
    for (auto const &r : receipts)
      if (r.tx_id == id)
        return r;
    return std::nullopt;
  }
};

struct LedgerConfig
{
  Asset   native_asset = "ETH";
  Amount  fee          = 0;  ///< flat per included transaction, in the native asset
  Address fee_sink     = "0xfee";
};

class Ledger
{
public:
  /// One ordering entry; more than one id makes an atomic bundle.
  using OrderingEntry = std::vector<TxId>;

  Ledger(SignatureScheme const &scheme, LedgerConfig cfg = {}) : scheme_(&scheme), cfg_(std::move(cfg)) {}

  LedgerConfig const &config() const { return cfg_; }

  /// Number of produced blocks; also the simulation clock.
  std::uint64_t height() const { return blocks_.size(); }

  Amount balance(Address const &a, Asset const &asset) const
  {
    auto it = accounts_.find(a);
    if (it == accounts_.end())
      return 0;
    auto jt = it->second.balances.find(asset);
    return jt == it->second.balances.end() ? 0 : jt->second;
  }

  std::uint64_t nonce(Address const &a) const
  {
    auto it = accounts_.find(a);
    return it == accounts_.end() ? 0 : it->second.nonce;
  }

  /// Sum of all balances of `asset`.
  Amount total_supply(Asset const &asset) const
  {
    Amount t = 0;
    for (auto const &[_, acct] : accounts_)
    {
      auto it = acct.balances.find(asset);
      if (it != acct.balances.end())
        t += it->second;
    }
    return t;
  }

  /// Minted minus burned.
  Amount issued(Asset const &asset) const
  {
    auto it = issued_.find(asset);
    return it == issued_.end() ? 0 : it->second;
  }

  void mint(Address const &to, Asset const &asset, Amount amount)
  {
    if (amount <= 0)
      throw InputError("mint: amount must be positive");
    accounts_[to].balances[asset] += amount;
    issued_[asset] += amount;
    pending_events_.push_back({{"type", "mint"}, {"to", to}, {"asset", asset}, {"amount", amount}});
  }

  void burn(Address const &from, Asset const &asset, Amount amount)
  {
    if (amount <= 0 || balance(from, asset) < amount)
      throw InputError("burn: insufficient balance");
    accounts_[from].balances[asset] -= amount;
    issued_[asset] -= amount;
    pending_events_.push_back({{"type", "burn"}, {"from", from}, {"asset", asset}, {"amount", amount}});
  }

  TxId submit(Transaction tx)
  {
    auto id = tx.id();
    if (pending_.count(id) || included_.count(id))
      throw InputError("submit: duplicate transaction " + id);
    pending_order_.push_back(id);
    pending_.emplace(id, std::move(tx));
    return id;
  }

  bool is_pending(TxId const &id) const { return pending_.count(id) != 0; }

  std::vector<TxId> pending_ids() const { return pending_order_; }

  /// Processes `ordering` in sequence, then drops any pending transaction
  /// whose nonce has been used. Pending transactions not named stay pending.
  BlockResult produce_block(std::vector<OrderingEntry> const &ordering)
  {
    Block b;
    b.height    = blocks_.size() + 1;
    b.prev_hash = blocks_.empty() ? std::string(64, '0') : blocks_.back().hash;
    for (auto &e : pending_events_)
      b.events.push_back(std::move(e));
    pending_events_.clear();

    BlockResult result;
    result.height = b.height;
    std::set<TxId> settled;

    for (auto const &entry : ordering)
    {
      auto snapshot = accounts_;
      auto events   = b.events;
      std::vector<TxReceipt> rs;
      bool                   ok = true;
      for (auto const &id : entry)
      {
        auto it = pending_.find(id);
        if (it == pending_.end())
          throw InputError("produce_block: " + id + " is not pending");
        auto r = execute(it->second, b.events);
        ok     = ok && r.status == TxStatus::Included;
        rs.push_back(std::move(r));
      }
      if (!ok && entry.size() > 1)
      {
        accounts_ = std::move(snapshot);
        b.events  = std::move(events);
        for (auto &r : rs)
          if (r.status == TxStatus::Included)
            r = {r.tx_id, TxStatus::Rejected, "bundle-aborted"};
      }
      for (auto &r : rs)
      {
        if (r.status == TxStatus::Included)
        {
          b.tx_ids.push_back(r.tx_id);
          included_[r.tx_id] = {b.height, pending_.at(r.tx_id)};
        }
        if (r.status != TxStatus::Deferred)
          settled.insert(r.tx_id);
        result.receipts.push_back(std::move(r));
      }
    }

    // Same-nonce competitors of included transactions are now void.
    for (auto const &[id, tx] : pending_)
      if (!settled.count(id) && tx.nonce < nonce(tx.sender))
      {
        result.receipts.push_back({id, TxStatus::Invalidated, "stale-nonce"});
        settled.insert(id);
      }
    for (auto const &id : settled)
      pending_.erase(id);
    std::erase_if(pending_order_, [&](TxId const &id) { return settled.count(id) != 0; });

    nlohmann::ordered_json h;
    h["height"] = b.height;
    h["prev"]   = b.prev_hash;
    h["txs"]    = b.tx_ids;
    h["events"] = b.events;
    b.hash      = sha256_hex(h.dump());
    blocks_.push_back(std::move(b));
    return result;
  }

  /// Produces a block containing every pending transaction in submission order.
  BlockResult produce_block()
  {
    std::vector<OrderingEntry> ordering;
    for (auto const &id : pending_order_)
      ordering.push_back({id});
    return produce_block(ordering);
  }

  bool verify_inclusion(InclusionProof const &p) const
  {
    if (p.height == 0 || p.height > blocks_.size())
      return false;
    auto const &ids = blocks_[p.height - 1].tx_ids;
    return std::find(ids.begin(), ids.end(), p.tx_id) != ids.end();
  }

  std::optional<InclusionProof> proof_for(TxId const &id) const
  {
    auto it = included_.find(id);
    if (it == included_.end())
      return std::nullopt;
    return InclusionProof{it->second.first, id};
  }

  /// The included transaction named by a proof that verifies.
  std::optional<Transaction> transaction(InclusionProof const &p) const
  {
    if (!verify_inclusion(p))
      return std::nullopt;
    return included_.at(p.tx_id).second;
  }

  std::vector<Block> const &blocks() const { return blocks_; }

  /// One JSON object per line: every block event tagged with its height.
  std::string events_jsonl() const
  {
    std::string out;
    for (auto const &b : blocks_)
      for (auto const &e : b.events)
      {
        nlohmann::ordered_json line;
        line["height"] = b.height;
        for (auto it = e.begin(); it != e.end(); ++it)
          line[it.key()] = it.value();
        out += line.dump() + "\n";
      }
    return out;
  }

private:
  struct Account
  {
    std::uint64_t            nonce = 0;
    std::map<Asset, Amount>  balances;
  };

  TxReceipt execute(Transaction const &tx, nlohmann::ordered_json &events)
  {
    auto const id = tx.id();
    if (!scheme_->verify(tx.sender, tx.signing_message(), tx.signature))
      return {id, TxStatus::Rejected, "bad-signature"};
    auto const cur = nonce(tx.sender);
    if (tx.nonce < cur)
      return {id, TxStatus::Invalidated, "stale-nonce"};
    if (tx.nonce > cur)
      return {id, TxStatus::Deferred, "future-nonce"};

    Amount const fee = cfg_.fee;
    if (balance(tx.sender, cfg_.native_asset) < fee)
      return {id, TxStatus::Rejected, "insufficient-fee"};

    if (auto const *t = std::get_if<Transfer>(&tx.payload))
    {
      if (t->amount < 0)
        return {id, TxStatus::Rejected, "negative-amount"};
      Amount const need = t->amount + (t->asset == cfg_.native_asset ? fee : 0);
      if (balance(tx.sender, t->asset) < need)
        return {id, TxStatus::Rejected, "insufficient-balance"};
      auto &from = accounts_[tx.sender];
      from.balances[t->asset] -= t->amount;
      accounts_[t->to].balances[t->asset] += t->amount;
      events.push_back({{"type", "transfer"},
                        {"tx", id},
                        {"from", tx.sender},
                        {"to", t->to},
                        {"asset", t->asset},
                        {"amount", t->amount},
                        {"memo", t->memo}});
    }
    else
    {
      auto const &c = std::get<Call>(tx.payload);
      events.push_back({{"type", "call"}, {"tx", id}, {"from", tx.sender}, {"target", c.target}});
    }
    auto &from = accounts_[tx.sender];
    from.nonce += 1;
    if (fee > 0)
    {
      from.balances[cfg_.native_asset] -= fee;
      accounts_[cfg_.fee_sink].balances[cfg_.native_asset] += fee;
    }
    return {id, TxStatus::Included, ""};
  }

  SignatureScheme const                                    *scheme_;
  LedgerConfig                                              cfg_;
  std::map<Address, Account>                                accounts_;
  std::map<Asset, Amount>                                   issued_;
  std::map<TxId, Transaction>                               pending_;
  std::vector<TxId>                                         pending_order_;
  std::map<TxId, std::pair<std::uint64_t, Transaction>>     included_;
  std::vector<Block>                                        blocks_;
  std::vector<nlohmann::ordered_json>                       pending_events_;
};

}  // namespace vbe
