#pragma once

// Dark DAO Lite: the DD token, the Lite contract that converts deposits of the
// DAO token into DD tokens and back, voting-rights auctions, and the
// redemption-order enumeration attack.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vbe/crypto.hpp"
#include "vbe/darkdao.hpp"
#include "vbe/ledger.hpp"

namespace vbe {

using ojson = nlohmann::ordered_json;

namespace detail {

inline void append_event(std::vector<ojson> &log, std::uint64_t t, ojson j)
{
  ojson e;
  e["t"] = t;
  for (auto it = j.begin(); it != j.end(); ++it)
    e[it.key()] = it.value();
  log.push_back(std::move(e));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// DD token

struct MintAuthorization
{
  Amount        amount = 0;
  std::uint64_t nonce  = 0;
  Party         recipient;

  std::string encode() const
  {
    ojson j;
    j["amount"]    = amount;
    j["nonce"]     = nonce;
    j["recipient"] = recipient;
    return j.dump();
  }
};

struct BurnReceipt
{
  std::uint64_t id = 0;
  Party         party;
  Amount        amount = 0;
};

/// Receipt id of a logged burn; checks against the token's receipt store.
struct BurnProof
{
  std::uint64_t receipt_id = 0;
};

class DDToken
{
public:
  DDToken(SignatureScheme const &scheme, std::string dd_pk) : scheme_(&scheme), dd_pk_(std::move(dd_pk)) {}

  void mint(Party const &p, MintAuthorization const &m, std::string const &sig)
  {
    if (!scheme_->verify(dd_pk_, m.encode(), sig))
      throw ProtocolError(ErrorCode::BadSignature, "mint authorization does not verify");
    if (m.recipient != p)
      throw ProtocolError(ErrorCode::WrongParty, "authorization names another recipient");
    auto &used = auth_nonces_[p];
    if (used.count(m.nonce))
      throw ProtocolError(ErrorCode::ReplayedNonce, "authorization nonce already used");
    used.insert(m.nonce);
    supply_ += m.amount;
    minted_ += m.amount;
    balances_[p] += m.amount;
    detail::append_event(events_, seq_++, {{"type", "mint"}, {"to", p}, {"amount", m.amount}});
  }

  BurnProof burn(Party const &p, Amount amount)
  {
    if (amount <= 0 || balance(p) < amount)
      throw ProtocolError(ErrorCode::InsufficientBalance, "burn exceeds balance");
    balances_[p] -= amount;
    supply_ -= amount;
    burned_ += amount;
    auto const id = static_cast<std::uint64_t>(receipts_.size() + 1);
    receipts_.push_back({id, p, amount});
    detail::append_event(events_, seq_++, {{"type", "burn"}, {"from", p}, {"amount", amount}, {"receipt", id}});
    return {id};
  }

  void transfer(Party const &from, Party const &to, Amount amount)
  {
    if (amount < 0 || balance(from) < amount)
      throw ProtocolError(ErrorCode::InsufficientBalance, "transfer exceeds balance");
    balances_[from] -= amount;
    balances_[to] += amount;
    detail::append_event(events_, seq_++, {{"type", "transfer"}, {"from", from}, {"to", to}, {"amount", amount}});
  }

  std::optional<BurnReceipt> verify_burn(BurnProof const &p) const
  {
    if (p.receipt_id == 0 || p.receipt_id > receipts_.size())
      return std::nullopt;
    return receipts_[p.receipt_id - 1];
  }

  Amount balance(Party const &p) const
  {
    auto it = balances_.find(p);
    return it == balances_.end() ? 0 : it->second;
  }

  Amount supply() const { return supply_; }
  Amount minted() const { return minted_; }
  Amount burned() const { return burned_; }

  std::vector<ojson> const &events() const { return events_; }

private:
  SignatureScheme const                      *scheme_;
  std::string                                 dd_pk_;
  Amount                                      supply_ = 0, minted_ = 0, burned_ = 0;
  std::map<Party, Amount>                     balances_;
  std::map<Party, std::set<std::uint64_t>>    auth_nonces_;
  std::vector<BurnReceipt>                    receipts_;
  std::vector<ojson>                          events_;
  std::uint64_t                               seq_ = 0;
};

// ---------------------------------------------------------------------------
// Lite contract

enum class WithdrawalOrder
{
  Fifo,
  Lifo,  ///< only for the enumeration experiment
};

struct LiteConfig
{
  Asset           dao_asset = "DAO";
  std::uint64_t   lockup    = 0;  ///< clock ticks between deposit proof and withdrawability/minting
  WithdrawalOrder order     = WithdrawalOrder::Fifo;
};

struct DepositAddress
{
  Address pk;
  Bytes   encrypted_key;
};

struct DepositProof
{
  InclusionProof inclusion;
  Bytes          encrypted_key;
};

struct SignedMint
{
  MintAuthorization authorization;
  std::string       signature;
};

struct DepositResult
{
  std::uint64_t             deposit_id = 0;
  std::optional<SignedMint> mint;  ///< present when no lockup applies
};

struct RedeemResult
{
  std::uint64_t            request_id = 0;
  std::vector<Transaction> transactions;
};

struct Auction
{
  std::uint64_t id = 0;
  std::string   proposal_hash;
  std::uint64_t end    = 0;
  std::uint64_t expiry = 0;
  struct Bid
  {
    Party  bidder;
    Amount amount = 0;
  };
  std::vector<Bid>     bids;
  std::optional<Party> winner;
  Amount               price = 0;
};

class DarkDaoLite
{
public:
  DarkDaoLite(SignatureScheme &scheme, Ledger &ledger, LiteConfig cfg = {})
      : scheme_(&scheme), ledger_(&ledger), cfg_(std::move(cfg)), dd_key_(scheme.keygen()),
        token_(scheme, dd_key_.pk)
  {
  }

  LiteConfig const &config() const { return cfg_; }
  DDToken          &token() { return token_; }
  DDToken const    &token() const { return token_; }
  std::string const &dd_pk() const { return dd_key_.pk; }
  std::uint64_t      now() const { return clock_ ? clock_() : ledger_->height(); }

  /// Replaces the default clock (the ledger height).
  void set_clock(std::function<std::uint64_t()> clock) { clock_ = std::move(clock); }

  DepositAddress get_deposit_address()
  {
    auto key = scheme_->keygen();
    detail::append_event(confidential_, now(), {{"op", "get_deposit_address"}, {"pk", key.pk}});
    return {key.pk, keystream_xor(dd_key_.sk, key.pk, key.sk)};
  }

  DepositResult deposit_and_mint(DepositProof const &proof, Party const &recipient)
  {
    if (registered_inclusions_.count(proof.inclusion))
      throw ProtocolError(ErrorCode::ReplayedProof, "deposit proof already registered");
    auto tx = ledger_->transaction(proof.inclusion);
    if (!tx)
      throw ProtocolError(ErrorCode::InvalidProof, "deposit not included at the claimed height");
    auto const *t = std::get_if<Transfer>(&tx->payload);
    if (t == nullptr || t->asset != cfg_.dao_asset || t->amount <= 0)
      throw ProtocolError(ErrorCode::InvalidProof, "not a deposit of the DAO token");
    Bytes const sk = keystream_xor(dd_key_.sk, t->to, proof.encrypted_key);
    if (SignatureScheme::public_id(sk) != t->to)
      throw ProtocolError(ErrorCode::InvalidProof, "key does not match the deposit address");

    auto it = accounts_.find(t->to);
    if (it == accounts_.end())
    {
      it = accounts_.emplace(t->to, LiteAccount{{sk, t->to}, order_.size(), 0, 0, 0}).first;
      order_.push_back(t->to);
    }
    it->second.tracked += t->amount;
    it->second.unlock_at = std::max(it->second.unlock_at, now() + cfg_.lockup);
    registered_inclusions_.insert(proof.inclusion);

    auto const id = static_cast<std::uint64_t>(deposits_.size() + 1);
    deposits_.push_back({id, t->to, t->amount, recipient, now()});
    detail::append_event(public_, now(), {{"op", "deposit_and_mint"}});
    detail::append_event(confidential_, now(),
                         {{"op", "deposit_and_mint"}, {"deposit", id}, {"pk", t->to}, {"amount", t->amount},
                          {"recipient", recipient}});

    DepositResult r{id, std::nullopt};
    if (cfg_.lockup == 0)
      r.mint = mint_authorization(id);
    return r;
  }

  /// The signed authorization for a deposit once its lockup has elapsed. The
  /// nonce is the deposit id, so the token rejects a second use.
  SignedMint mint_authorization(std::uint64_t deposit_id) const
  {
    if (deposit_id == 0 || deposit_id > deposits_.size())
      throw ProtocolError(ErrorCode::UnknownDeposit, "no deposit " + std::to_string(deposit_id));
    auto const &d = deposits_[deposit_id - 1];
    if (now() < d.registered_at + cfg_.lockup)
      throw ProtocolError(ErrorCode::LockupActive, "deposit still locked");
    MintAuthorization m{d.amount, d.id, d.recipient};
    return {m, SignatureScheme::sign(dd_key_, m.encode())};
  }

  RedeemResult redeem_and_withdraw(BurnProof const &proof, Address const &recipient)
  {
    if (registered_burns_.count(proof.receipt_id))
      throw ProtocolError(ErrorCode::ReplayedProof, "burn proof already registered");
    auto receipt = token_.verify_burn(proof);
    if (!receipt)
      throw ProtocolError(ErrorCode::InvalidProof, "unknown burn receipt");
    Amount outstanding = 0;
    for (auto const &[_, r] : requests_)
      outstanding += r.remaining;
    if (receipt->amount > tracked_total() - outstanding)
      throw ProtocolError(ErrorCode::InsufficientLiteBalance, "withdrawal exceeds tracked balances");
    registered_burns_.insert(proof.receipt_id);

    auto const id = static_cast<std::uint64_t>(requests_.size() + 1);
    requests_[id] = {id, recipient, receipt->amount};
    detail::append_event(public_, now(), {{"op", "redeem_and_withdraw"}});
    detail::append_event(confidential_, now(),
                         {{"op", "redeem_and_withdraw"}, {"request", id}, {"amount", receipt->amount},
                          {"recipient", recipient}});
    return {id, withdrawal_transactions(id)};
  }

  /// Signed transfers covering what a request still needs, from the current
  /// withdrawal accounts at their current nonces. Nothing is reserved, so
  /// concurrent requests receive competing transactions.
  std::vector<Transaction> withdrawal_transactions(std::uint64_t request_id) const
  {
    auto it = requests_.find(request_id);
    if (it == requests_.end())
      throw ProtocolError(ErrorCode::UnknownRequest, "no request " + std::to_string(request_id));
    std::vector<Transaction> out;
    Amount                   left = it->second.remaining;
    for (auto const &pk : selection_order())
    {
      if (left == 0)
        break;
      auto const &a = accounts_.at(pk);
      if (a.tracked == 0 || now() < a.unlock_at)
        continue;
      Amount const amt = std::min(a.tracked, left);
      out.push_back(make_transaction(
          a.key, a.nonce, Transfer{it->second.recipient, cfg_.dao_asset, amt, "w" + std::to_string(request_id)}));
      left -= amt;
    }
    return out;
  }

  /// Records an included withdrawal: the account balance drops, its nonce
  /// advances and the request needs correspondingly less.
  void confirm_withdrawal(InclusionProof const &proof)
  {
    if (confirmed_.count(proof))
      throw ProtocolError(ErrorCode::ReplayedProof, "withdrawal already confirmed");
    auto tx = ledger_->transaction(proof);
    if (!tx)
      throw ProtocolError(ErrorCode::InvalidProof, "withdrawal not included at the claimed height");
    auto acct = accounts_.find(tx->sender);
    auto const *t = std::get_if<Transfer>(&tx->payload);
    if (acct == accounts_.end() || t == nullptr || t->asset != cfg_.dao_asset || t->memo.size() < 2 ||
        t->memo[0] != 'w')
      throw ProtocolError(ErrorCode::InvalidProof, "not a Lite withdrawal");
    auto req = requests_.find(std::stoull(t->memo.substr(1)));
    if (req == requests_.end())
      throw ProtocolError(ErrorCode::UnknownRequest, "withdrawal names no request");
    confirmed_.insert(proof);
    acct->second.tracked -= t->amount;
    acct->second.nonce = tx->nonce + 1;
    req->second.remaining = std::max<Amount>(0, req->second.remaining - t->amount);
    detail::append_event(public_, now(), {{"op", "confirm_withdrawal"}});
    detail::append_event(confidential_, now(),
                         {{"op", "confirm_withdrawal"}, {"request", req->first}, {"pk", tx->sender},
                          {"amount", t->amount}});
  }

  Amount request_remaining(std::uint64_t request_id) const
  {
    auto it = requests_.find(request_id);
    if (it == requests_.end())
      throw ProtocolError(ErrorCode::UnknownRequest, "no request " + std::to_string(request_id));
    return it->second.remaining;
  }

  Amount tracked_total() const
  {
    Amount t = 0;
    for (auto const &[_, a] : accounts_)
      t += a.tracked;
    return t;
  }

  Amount tracked(Address const &pk) const
  {
    auto it = accounts_.find(pk);
    return it == accounts_.end() ? 0 : it->second.tracked;
  }

  /// The nonce the contract will sign next for an account.
  std::uint64_t account_nonce(Address const &pk) const { return accounts_.at(pk).nonce; }

  std::vector<Address> const &accounts_in_deposit_order() const { return order_; }

  // Auctions --------------------------------------------------------------

  std::uint64_t auction_create(std::string const &proposal_hash, std::uint64_t end, std::uint64_t expiry)
  {
    if (end >= expiry)
      throw ProtocolError(ErrorCode::AuctionEndsAfterExpiry, "auction must end before the proposal expires");
    if (end <= now())
      throw ProtocolError(ErrorCode::AuctionClosed, "auction end is not in the future");
    auto const id = static_cast<std::uint64_t>(auctions_.size() + 1);
    auctions_[id] = {id, proposal_hash, end, expiry, {}, std::nullopt, 0};
    detail::append_event(public_, now(), {{"op", "auction_create"}, {"auction", id}, {"proposal", proposal_hash},
                                          {"end", end}});
    return id;
  }

  void auction_bid(std::uint64_t id, Party const &bidder, Amount amount)
  {
    auto &a = auction(id);
    if (now() >= a.end)
      throw ProtocolError(ErrorCode::AuctionClosed, "bid after auction end");
    if (amount <= 0)
      throw InputError("auction_bid: amount must be positive");
    a.bids.push_back({bidder, amount});
    detail::append_event(public_, now(), {{"op", "auction_bid"}, {"auction", id}, {"bidder", bidder},
                                          {"amount", amount}});
  }

  /// First price; ties go to the earliest bid.
  Party auction_settle(std::uint64_t id)
  {
    auto &a = auction(id);
    if (now() < a.end)
      throw ProtocolError(ErrorCode::AuctionNotEnded, "settle before auction end");
    if (a.winner)
      throw ProtocolError(ErrorCode::AuctionSettled, "auction already settled");
    if (a.bids.empty())
      throw ProtocolError(ErrorCode::NoBids, "auction has no bids");
    auto best = a.bids.begin();
    for (auto it = a.bids.begin(); it != a.bids.end(); ++it)
      if (it->amount > best->amount)
        best = it;
    a.winner = best->bidder;
    a.price  = best->amount;
    revenue_ += a.price;
    detail::append_event(public_, now(), {{"op", "auction_settle"}, {"auction", id}, {"winner", *a.winner},
                                          {"price", a.price}});
    return *a.winner;
  }

  Auction const &auction_view(std::uint64_t id) const
  {
    auto it = auctions_.find(id);
    if (it == auctions_.end())
      throw ProtocolError(ErrorCode::UnknownAuction, "no auction " + std::to_string(id));
    return it->second;
  }

  /// One vote signature from every Lite account, for the auctioned proposal.
  std::vector<std::pair<Address, std::string>> sign_votes_for_winner(std::uint64_t id, Party const &caller,
                                                                     std::string const &choice)
  {
    auto &a = auction(id);
    if (!a.winner || *a.winner != caller)
      throw ProtocolError(ErrorCode::NotWinner, "only the auction winner may request votes");
    Message m{a.proposal_hash, "vote", choice, std::nullopt};
    std::vector<std::pair<Address, std::string>> out;
    for (auto const &pk : order_)
      out.emplace_back(pk, SignatureScheme::sign(accounts_.at(pk).key, m.encode()));
    detail::append_event(confidential_, now(),
                         {{"op", "sign_votes_for_winner"}, {"auction", id}, {"signatures", out.size()}});
    return out;
  }

  Amount revenue() const { return revenue_; }

  std::vector<ojson> const &public_log() const { return public_; }
  std::vector<ojson> const &confidential_log() const { return confidential_; }

private:
  struct LiteAccount
  {
    KeyPair       key;
    std::size_t   seq       = 0;
    Amount        tracked   = 0;
    std::uint64_t nonce     = 0;
    std::uint64_t unlock_at = 0;
  };

  struct Deposit
  {
    std::uint64_t id = 0;
    Address       pk;
    Amount        amount = 0;
    Party         recipient;
    std::uint64_t registered_at = 0;
  };

  struct Request
  {
    std::uint64_t id = 0;
    Address       recipient;
    Amount        remaining = 0;
  };

  std::vector<Address> selection_order() const
  {
    std::vector<Address> o = order_;
    if (cfg_.order == WithdrawalOrder::Lifo)
      std::reverse(o.begin(), o.end());
    return o;
  }

  Auction &auction(std::uint64_t id)
  {
    auto it = auctions_.find(id);
    if (it == auctions_.end())
      throw ProtocolError(ErrorCode::UnknownAuction, "no auction " + std::to_string(id));
    return it->second;
  }

  SignatureScheme                       *scheme_;
  Ledger                                *ledger_;
  std::function<std::uint64_t()>         clock_;
  LiteConfig                             cfg_;
  KeyPair                                dd_key_;
  DDToken                                token_;
  std::map<Address, LiteAccount>         accounts_;
  std::vector<Address>                   order_;
  std::vector<Deposit>                   deposits_;
  std::set<InclusionProof>               registered_inclusions_;
  std::set<std::uint64_t>                registered_burns_;
  std::set<InclusionProof>               confirmed_;
  std::map<std::uint64_t, Request>       requests_;
  std::map<std::uint64_t, Auction>       auctions_;
  Amount                                 revenue_ = 0;
  std::vector<ojson>                     public_;
  std::vector<ojson>                     confidential_;
};

// ---------------------------------------------------------------------------
// Enumeration attack

struct AttackConfig
{
  WithdrawalOrder order         = WithdrawalOrder::Lifo;
  Amount          budget        = 1;   ///< adversary's DAO tokens, deposited before the window
  int             victims       = 10;
  Amount          victim_amount = 1;
  std::uint64_t   window        = 50;  ///< blocks
  std::uint64_t   lockup        = 0;
  std::uint64_t   seed          = 1;
};

struct AttackReport
{
  std::vector<Address> victim_addresses;  ///< in deposit order
  std::vector<Address> linked;            ///< victim addresses the adversary saw withdrawn from, sorted
  int                  redemptions = 0;
  double               rate        = 0.0;
  std::string          ledger_head;       ///< hash of the last block
  std::string          ledger_events;     ///< JSONL
};

/// Replays the redeem-and-redeposit strategy on a fresh ledger and Lite
/// instance. Time is counted in window steps; lockups use the same unit. Victims make single deposits at distinct random blocks of the
/// window. After each victim deposit the adversary burns and redeems one
/// victim deposit's worth of DD tokens, notes which Lite accounts paid it, and
/// redeposits the proceeds to a fresh address.
inline AttackReport enumeration_attack(AttackConfig const &cfg)
{
  if (cfg.victims < 0 || cfg.budget < 0 || cfg.victim_amount <= 0)
    throw InputError("enumeration_attack: negative parameters");
  if (static_cast<std::uint64_t>(cfg.victims) > cfg.window)
    throw InputError("enumeration_attack: more victims than blocks in the window");

  SignatureScheme scheme(cfg.seed);
  Ledger          ledger(scheme);
  DarkDaoLite     lite(scheme, ledger, {"DAO", cfg.lockup, cfg.order});
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  std::uint64_t clock = 0;
  lite.set_clock([&clock] { return clock; });

  Party const adversary = "adversary";
  auto        adv_key   = scheme.keygen();
  std::set<Address>   own;  // addresses the adversary deposited to
  std::vector<std::uint64_t> pending_mints;  // adversary deposits awaiting authorization

  auto deposit = [&](KeyPair const &from, Amount amount, Party const &recipient) {
    auto addr = lite.get_deposit_address();
    auto id   = ledger.submit(make_transaction(from, ledger.nonce(from.pk), Transfer{addr.pk, "DAO", amount, ""}));
    ledger.produce_block({{id}});
    auto res = lite.deposit_and_mint({*ledger.proof_for(id), addr.encrypted_key}, recipient);
    if (res.mint)
      lite.token().mint(recipient, res.mint->authorization, res.mint->signature);
    return std::make_pair(addr.pk, res);
  };

  auto collect_mints = [&] {
    std::vector<std::uint64_t> still;
    for (auto id : pending_mints)
    {
      try
      {
        auto m = lite.mint_authorization(id);
        lite.token().mint(adversary, m.authorization, m.signature);
      }
      catch (ProtocolError const &e)
      {
        if (e.code() != ErrorCode::LockupActive)
          throw;
        still.push_back(id);
      }
    }
    pending_mints = std::move(still);
  };

  // The adversary's stake enters before the window opens and is unlocked.
  if (cfg.budget > 0)
  {
    ledger.mint(adv_key.pk, "DAO", cfg.budget);
    auto [pk, res] = deposit(adv_key, cfg.budget, adversary);
    own.insert(pk);
    if (!res.mint)
      pending_mints.push_back(res.deposit_id);
    clock += cfg.lockup;
    collect_mints();
  }

  std::vector<std::uint64_t> slots(cfg.window);
  std::iota(slots.begin(), slots.end(), 0);
  std::shuffle(slots.begin(), slots.end(), rng);
  slots.resize(static_cast<std::size_t>(cfg.victims));
  std::sort(slots.begin(), slots.end());

  AttackReport report;
  std::set<Address> victims;
  std::set<Address> seen;
  std::size_t next = 0;
  for (std::uint64_t step = 0; step < cfg.window; ++step, ++clock)
  {
    collect_mints();
    if (next < slots.size() && slots[next] == step)
    {
      ++next;
      auto vkey = scheme.keygen();
      ledger.mint(vkey.pk, "DAO", cfg.victim_amount);
      auto [pk, res] = deposit(vkey, cfg.victim_amount, "victim" + std::to_string(next));
      victims.insert(pk);
      report.victim_addresses.push_back(pk);

      Amount const want = std::min(cfg.victim_amount, lite.token().balance(adversary));
      if (want > 0)
      {
        auto burn = lite.token().burn(adversary, want);
        auto red  = lite.redeem_and_withdraw(burn, adv_key.pk);
        ++report.redemptions;
        std::vector<Ledger::OrderingEntry> ordering;
        for (auto const &tx : red.transactions)
          ordering.push_back({ledger.submit(tx)});
        ledger.produce_block(ordering);
        Amount received = 0;
        for (auto const &tx : red.transactions)
          if (auto p = ledger.proof_for(tx.id()))
          {
            lite.confirm_withdrawal(*p);
            seen.insert(tx.sender);
            received += std::get<Transfer>(tx.payload).amount;
          }
        if (received > 0)
        {
          auto [apk, ares] = deposit(adv_key, received, adversary);
          own.insert(apk);
          if (!ares.mint)
            pending_mints.push_back(ares.deposit_id);
        }
      }
    }
  }

  for (auto const &a : seen)
    if (victims.count(a))
      report.linked.push_back(a);
  report.rate = victims.empty() ? 0.0 : static_cast<double>(report.linked.size()) / victims.size();
  report.ledger_head   = ledger.blocks().empty() ? "" : ledger.blocks().back().hash;
  report.ledger_events = ledger.events_jsonl();
  return report;
}

}  // namespace vbe
