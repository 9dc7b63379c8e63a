#pragma once

// Basic key-encumbrance Dark DAO: encumbered keys, bribe offers with a
// restricted message class, and the optional timestamp-anchored policy that
// defeats pre-signing. Confidential operations log only to the private log.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vbe/crypto.hpp"

namespace vbe {

using Party = std::string;

enum class ErrorCode
{
  UnknownAccount,
  WrongParty,
  AlreadyEnrolled,
  PriorRestrictedSignature,
  PoolExhausted,
  MessageRestricted,
  MessageOutsideScope,
  UnknownBribe,
  WrongBriber,
  NotEnrolled,
  InsufficientFunds,
  // DD token and Lite
  BadSignature,
  ReplayedNonce,
  InsufficientBalance,
  ReplayedProof,
  InvalidProof,
  LockupActive,
  UnknownDeposit,
  InsufficientLiteBalance,
  UnknownRequest,
  // auctions
  UnknownAuction,
  AuctionEndsAfterExpiry,
  AuctionClosed,
  AuctionNotEnded,
  AuctionSettled,
  NoBids,
  NotWinner,
};

inline const char *to_string(ErrorCode e)
{
  switch (e)
  {
  case ErrorCode::UnknownAccount:
    return "unknown-account";
  case ErrorCode::WrongParty:
    return "wrong-party";
  case ErrorCode::AlreadyEnrolled:
    return "already-enrolled";
  case ErrorCode::PriorRestrictedSignature:
    return "prior-restricted-signature";
  case ErrorCode::PoolExhausted:
    return "pool-exhausted";
  case ErrorCode::MessageRestricted:
    return "message-restricted";
  case ErrorCode::MessageOutsideScope:
    return "message-outside-scope";
  case ErrorCode::UnknownBribe:
    return "unknown-bribe";
  case ErrorCode::WrongBriber:
    return "wrong-briber";
  case ErrorCode::NotEnrolled:
    return "not-enrolled";
  case ErrorCode::InsufficientFunds:
    return "insufficient-funds";
  case ErrorCode::BadSignature:
    return "bad-signature";
  case ErrorCode::ReplayedNonce:
    return "replayed-nonce";
  case ErrorCode::InsufficientBalance:
    return "insufficient-balance";
  case ErrorCode::ReplayedProof:
    return "replayed-proof";
  case ErrorCode::InvalidProof:
    return "invalid-proof";
  case ErrorCode::LockupActive:
    return "lockup-active";
  case ErrorCode::UnknownDeposit:
    return "unknown-deposit";
  case ErrorCode::InsufficientLiteBalance:
    return "insufficient-lite-balance";
  case ErrorCode::UnknownRequest:
    return "unknown-request";
  case ErrorCode::UnknownAuction:
    return "unknown-auction";
  case ErrorCode::AuctionEndsAfterExpiry:
    return "auction-ends-after-expiry";
  case ErrorCode::AuctionClosed:
    return "auction-closed";
  case ErrorCode::AuctionNotEnded:
    return "auction-not-ended";
  case ErrorCode::AuctionSettled:
    return "auction-settled";
  case ErrorCode::NoBids:
    return "no-bids";
  case ErrorCode::NotWinner:
    return "not-winner";
  }
  return "?";
}

/// A protocol assertion failed. State is left unchanged.
class ProtocolError : public std::runtime_error
{
public:
  ProtocolError(ErrorCode code, std::string const &what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
  {
  }

  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

/// A message to be signed. `anchor` is the creation time of the object it
/// refers to (for a vote, the proposal's creation time), if known.
struct Message
{
  std::string                  proposal_hash;
  std::string                  kind = "vote";
  std::string                  body;
  std::optional<std::uint64_t> anchor;

  std::string encode() const
  {
    nlohmann::ordered_json j;
    j["proposal"] = proposal_hash;
    j["kind"]     = kind;
    j["body"]     = body;
    j["anchor"]   = anchor ? nlohmann::ordered_json(*anchor) : nlohmann::ordered_json(nullptr);
    return j.dump();
  }

  std::string digest() const { return sha256_hex(encode()); }
};

/// The restricted message class: every message about one proposal, optionally
/// limited to some message kinds.
struct RestrictedClass
{
  std::string           proposal_hash;
  std::set<std::string> kinds;  ///< empty means every kind

  bool contains(Message const &m) const
  {
    return m.proposal_hash == proposal_hash && (kinds.empty() || kinds.count(m.kind));
  }
};

struct PolicyDecision
{
  bool restricted = false;
  bool warning    = false;  ///< message had no anchor
};

/// Anchored encumbrance: only messages created after enrollment can be
/// restricted. A message without an anchor is left unrestricted.
inline PolicyDecision policy_restricts(Message const &m, std::uint64_t enrollment_time)
{
  if (!m.anchor)
    return {false, true};
  return {*m.anchor > enrollment_time, false};
}

enum class EncumbrancePolicy
{
  Plain,     ///< restriction is membership in the class alone
  Anchored,  ///< additionally requires an anchor after enrollment
};

struct BribeOffer
{
  std::uint64_t   id = 0;
  std::int64_t    amount = 0;  ///< paid per acceptance
  std::int64_t    pool   = 0;  ///< remaining deposit
  std::int64_t    paid   = 0;  ///< total paid out so far
  std::int64_t    deposited = 0;
  RestrictedClass restricted;
  Party           briber;
};

struct EncumberedAccount
{
  KeyPair                            key;
  Party                              owner;
  std::optional<std::uint64_t>       bribe_id;
  std::map<std::string, Message>     signed_messages;  ///< by digest
  std::uint64_t                      enrollment_time = 0;
};

class DarkDao
{
public:
  DarkDao(std::uint64_t seed, EncumbrancePolicy policy = EncumbrancePolicy::Plain)
      : scheme_(seed), policy_(policy)
  {
  }

  std::uint64_t now() const { return clock_; }
  void          advance(std::uint64_t dt) { clock_ += dt; }

  /// Credits a party's token balance held by the contract.
  void fund(Party const &p, std::int64_t amount)
  {
    if (amount < 0)
      throw InputError("fund: negative amount");
    funds_[p] += amount;
    confidential({{"op", "fund"}, {"party", p}, {"amount", amount}});
  }

  std::int64_t funds(Party const &p) const
  {
    auto it = funds_.find(p);
    return it == funds_.end() ? 0 : it->second;
  }

  std::string keygen(Party const &p)
  {
    tick();
    auto key = scheme_.keygen();
    auto pk  = key.pk;
    accounts_[pk] = {std::move(key), p, std::nullopt, {}, clock_};
    public_event({{"op", "keygen"}});
    confidential({{"op", "keygen"}, {"party", p}, {"pk", pk}});
    return pk;
  }

  /// True iff `m` is restricted for the account under the active bribe.
  bool restricted_for(EncumberedAccount const &a, BribeOffer const &b, Message const &m) const
  {
    if (!b.restricted.contains(m))
      return false;
    if (policy_ == EncumbrancePolicy::Plain)
      return true;
    return policy_restricts(m, a.enrollment_time).restricted;
  }

  std::string sign(Party const &p, std::string const &pk, Message const &m)
  {
    tick();
    auto &a = account(pk);
    if (a.owner != p)
      fail(ErrorCode::WrongParty, "sign by non-owner");
    if (a.bribe_id && restricted_for(a, bribes_.at(*a.bribe_id), m))
      fail(ErrorCode::MessageRestricted, "message is in the restricted class");
    if (policy_ == EncumbrancePolicy::Anchored && !m.anchor)
      warnings_.push_back("unanchored message signed as unrestricted");
    auto sig = SignatureScheme::sign(a.key, m.encode());
    a.signed_messages.emplace(m.digest(), m);
    public_event({{"op", "sign"}});
    confidential({{"op", "sign"}, {"party", p}, {"pk", pk}, {"message", m.digest()}});
    return sig;
  }

  std::uint64_t register_bribe(Party const &briber, std::int64_t amount, RestrictedClass restricted,
                               std::int64_t deposit)
  {
    tick();
    if (amount <= 0 || deposit < 0)
      throw InputError("register_bribe: amount must be positive and deposit non-negative");
    if (funds(briber) < deposit)
      fail(ErrorCode::InsufficientFunds, "briber cannot cover the deposit");
    funds_[briber] -= deposit;
    auto const id = static_cast<std::uint64_t>(bribes_.size() + 1);
    bribes_[id]   = {id, amount, deposit, 0, deposit, std::move(restricted), briber};
    public_event({{"op", "register_bribe"}});
    confidential({{"op", "register_bribe"},
                  {"briber", briber},
                  {"bribe_id", id},
                  {"amount", amount},
                  {"deposit", deposit},
                  {"proposal", bribes_[id].restricted.proposal_hash}});
    return id;
  }

  /// Enrolls the account in the bribe and pays bribeAmount to the owner.
  std::int64_t take_bribe(Party const &p, std::string const &pk, std::uint64_t bribe_id)
  {
    tick();
    auto &a = account(pk);
    if (a.owner != p)
      fail(ErrorCode::WrongParty, "take_bribe by non-owner");
    auto it = bribes_.find(bribe_id);
    if (it == bribes_.end())
      fail(ErrorCode::UnknownBribe, "no bribe " + std::to_string(bribe_id));
    auto &b = it->second;
    if (a.bribe_id)
      fail(ErrorCode::AlreadyEnrolled, "account already sold");
    for (auto const &[_, m] : a.signed_messages)
      if (restricted_for(a, b, m))
        fail(ErrorCode::PriorRestrictedSignature, "owner already signed a restricted message");
    if (b.pool < b.amount)
      fail(ErrorCode::PoolExhausted, "bribe pool exhausted");
    a.bribe_id = bribe_id;
    b.pool -= b.amount;
    b.paid += b.amount;
    funds_[p] += b.amount;
    public_event({{"op", "take_bribe"}});
    confidential({{"op", "take_bribe"}, {"party", p}, {"pk", pk}, {"bribe_id", bribe_id}, {"paid", b.amount}});
    return b.amount;
  }

  std::string sign_via_encumbered_key(Party const &briber, std::string const &pk, Message const &m,
                                      std::uint64_t bribe_id)
  {
    tick();
    auto &a = account(pk);
    if (!a.bribe_id)
      fail(ErrorCode::NotEnrolled, "account has not taken a bribe");
    if (*a.bribe_id != bribe_id)
      fail(ErrorCode::UnknownBribe, "account is enrolled in a different bribe");
    auto const &b = bribes_.at(*a.bribe_id);
    if (b.briber != briber)
      fail(ErrorCode::WrongBriber, "caller is not the briber");
    if (!restricted_for(a, b, m))
      fail(ErrorCode::MessageOutsideScope, "message is not in the restricted class");
    auto sig = SignatureScheme::sign(a.key, m.encode());
    a.signed_messages.emplace(m.digest(), m);
    public_event({{"op", "sign_via_encumbered_key"}});
    confidential({{"op", "sign_via_encumbered_key"}, {"briber", briber}, {"pk", pk}, {"message", m.digest()}});
    return sig;
  }

  bool verify(std::string const &pk, Message const &m, std::string const &sig) const
  {
    return scheme_.verify(pk, m.encode(), sig);
  }

  BribeOffer const &bribe(std::uint64_t id) const
  {
    auto it = bribes_.find(id);
    if (it == bribes_.end())
      fail(ErrorCode::UnknownBribe, "no bribe " + std::to_string(id));
    return it->second;
  }

  EncumberedAccount const &account_view(std::string const &pk) const
  {
    auto it = accounts_.find(pk);
    if (it == accounts_.end())
      fail(ErrorCode::UnknownAccount, pk);
    return it->second;
  }

  std::vector<std::string> const &warnings() const { return warnings_; }

  std::vector<nlohmann::ordered_json> const &public_log() const { return public_; }
  std::vector<nlohmann::ordered_json> const &confidential_log() const { return confidential_; }

  /// Records a failed call. Callers that catch ProtocolError use this to keep
  /// both logs complete.
  void log_failure(std::string const &op, ErrorCode code)
  {
    public_event({{"op", op}, {"error", true}});
    confidential({{"op", op}, {"error", to_string(code)}});
  }

private:
  [[noreturn]] static void fail(ErrorCode c, std::string const &what) { throw ProtocolError(c, what); }

  EncumberedAccount &account(std::string const &pk)
  {
    auto it = accounts_.find(pk);
    if (it == accounts_.end())
      fail(ErrorCode::UnknownAccount, pk);
    return it->second;
  }

  void tick() { ++clock_; }

  void public_event(nlohmann::ordered_json j)
  {
    nlohmann::ordered_json e;
    e["t"] = clock_;
    for (auto it = j.begin(); it != j.end(); ++it)
      e[it.key()] = it.value();
    public_.push_back(std::move(e));
  }

  void confidential(nlohmann::ordered_json j)
  {
    nlohmann::ordered_json e;
    e["t"] = clock_;
    for (auto it = j.begin(); it != j.end(); ++it)
      e[it.key()] = it.value();
    confidential_.push_back(std::move(e));
  }

  SignatureScheme                          scheme_;
  EncumbrancePolicy                        policy_;
  std::uint64_t                            clock_ = 0;
  std::map<std::string, EncumberedAccount> accounts_;
  std::map<std::uint64_t, BribeOffer>      bribes_;
  std::map<Party, std::int64_t>            funds_;
  std::vector<std::string>                 warnings_;
  std::vector<nlohmann::ordered_json>      public_;
  std::vector<nlohmann::ordered_json>      confidential_;
};

}  // namespace vbe
