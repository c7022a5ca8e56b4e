#ifndef BCDN_PROTOCOL_HPP
#define BCDN_PROTOCOL_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bcdn/consensus.hpp"
#include "bcdn/crypto.hpp"
#include "bcdn/ledger.hpp"

namespace bcdn::protocol {

using crypto::Bytes;
using crypto::Ciphertext;
using crypto::Signature;
using crypto::VirtualIdentity;

/// Facade over the chain and its commit path. Transactions accumulate in a
/// mempool and are cut into a block either on flush() or when the block
/// interval elapses. With consensus enabled every block runs a PBFT round
/// before it is appended.
class Bcn {
 public:
  struct Options {
    crypto::SchemeKind scheme = crypto::SchemeKind::Fast;
    std::uint64_t node_key_seed = 0xb0c4'0000;
    std::uint64_t block_interval = 10;  // ticks between block cuts
    bool use_consensus = false;
    consensus::PbftConfig consensus_config;
  };

  explicit Bcn(const Options& options);

  void submit(ledger::Transaction tx);
  /// Cuts a block from the mempool (empty mempool is a no-op). Returns the
  /// index of the appended block.
  std::optional<std::uint64_t> flush();
  /// Advances simulated time; cuts a block when the interval elapses.
  void tick();

  std::uint64_t now() const { return tick_; }
  ledger::Chain& chain() { return chain_; }
  const ledger::Chain& chain() const { return chain_; }
  const crypto::Scheme& scheme() const { return *scheme_; }
  std::shared_ptr<const crypto::Scheme> scheme_ptr() const { return scheme_; }
  const crypto::KeyPair& node_keys() const { return node_keys_; }

 private:
  std::shared_ptr<const crypto::Scheme> scheme_;
  crypto::KeyPair node_keys_;
  ledger::Chain chain_;
  Options options_;
  std::vector<ledger::Transaction> mempool_;
  std::uint64_t tick_ = 0;
  std::uint64_t last_cut_ = 0;
  std::unique_ptr<consensus::PbftSim> pbft_;
};

struct CpAccount {
  std::string cp_id;
  crypto::KeyPair keypair;
  std::string address;
  std::string public_info;
  bool registered = false;
};

struct UserAccount {
  crypto::KeyPair keypair;
  VirtualIdentity vid;
  bool registered = false;

  static UserAccount create(const crypto::Scheme& scheme, std::uint64_t seed);
};

// --- Authentication handshake (messages V1, V2, V3) ---

struct V1 {
  VirtualIdentity vid;
  std::uint64_t nonce = 0;
  Signature signature;  // user key over (vid, nonce)
};

struct V2 {
  VirtualIdentity vid;
  std::uint64_t nonce_plus_1 = 0;
  Ciphertext ciphertext;  // under user public key: (vid, nonce+1, cp pub key)
};

struct V3 {
  VirtualIdentity vid;
  std::uint64_t nonce_plus_2 = 0;
  Ciphertext ciphertext;  // under cp public key: (vid, nonce+2)
};

enum class FailReason { UnknownVid, BadSignature, BadNonce, BadCiphertext };
const char* fail_reason_name(FailReason r);

enum class AuthState { Init, V1Sent, V2Sent, Authenticated, Failed };

/// User side of the handshake.
struct UserSession {
  AuthState state = AuthState::Init;
  VirtualIdentity vid;
  std::uint64_t nonce = 0;
  Bytes cp_public_key;  // learned from V2
  std::optional<FailReason> failure;
};

/// CP side. user_public_key stays empty until the BCN validated the vid.
struct CpSession {
  AuthState state = AuthState::Init;
  VirtualIdentity vid;
  std::uint64_t nonce = 0;
  Bytes user_public_key;
  std::optional<FailReason> failure;
};

/// Registers the CP's public key, address and public info on chain.
/// Throws ledger::ValidationError on duplicate registration.
void register_cp(CpAccount& cp, Bcn& bcn);

/// Commits UserRegistration{pub, vid, node signature over (pub, vid)}.
void register_user(UserAccount& user, Bcn& bcn);

V1 auth_initiate(const UserAccount& user, UserSession& session,
                 std::uint64_t nonce, const crypto::Scheme& scheme);
std::variant<V2, FailReason> auth_respond(const CpAccount& cp,
                                          CpSession& session, const V1& v1,
                                          const Bcn& bcn);
std::variant<V3, FailReason> auth_confirm(const UserAccount& user,
                                          UserSession& session, const V2& v2,
                                          const crypto::Scheme& scheme);
std::variant<AuthState, FailReason> auth_finalize(const CpAccount& cp,
                                                  CpSession& session,
                                                  const V3& v3,
                                                  const crypto::Scheme& scheme);

// --- Smart contract lifecycle ---

enum class ContractState { Requested, PaymentRequested, Paid, Delivered,
                           Committed };

struct SmartContract {
  std::string contract_id;
  VirtualIdentity vid;
  std::string cp_id;
  std::optional<ledger::ContentMetadata> content;
  std::string plan_tag;
  std::uint64_t fee = 1;
  ContractState state = ContractState::Requested;
  std::uint64_t timestamp = 0;  // set at commit
  std::optional<std::string> failure;
};

struct ServiceRequest {
  std::optional<ledger::ContentMetadata> content;  // on-demand
  std::string plan_tag;                            // or flat-rate
  std::uint64_t fee = 1;
};

/// Drives Requested -> PaymentRequested -> Paid -> Delivered -> Committed,
/// committing a Payment and a ContractRecord on chain. When `flush` is false
/// the transactions stay in the mempool and the contract remains Delivered
/// for the caller to commit in a batch (see Bcn::tick / Bcn::flush).
SmartContract run_contract(const UserAccount& user, const CpAccount& cp,
                           const ServiceRequest& service, Bcn& bcn,
                           const std::string& contract_id, bool flush = true);

}  // namespace bcdn::protocol

#endif
