#ifndef BCDN_LEDGER_HPP
#define BCDN_LEDGER_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bcdn/crypto.hpp"
#include "bcdn/features.hpp"

namespace bcdn::ledger {

using crypto::Bytes;
using crypto::Digest;
using crypto::Signature;
using crypto::VirtualIdentity;

/// Raised when a transaction fails kind-specific validation on append.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised by query_request_history for unregistered or unverified callers.
struct AuthorizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ContentMetadata {
  std::string content_id;
  FeatureVector features;
  std::string cp_id;
};

struct CpRegistration {
  std::string cp_id;
  Bytes cp_public_key;
  std::string address;
  std::string public_info;
};

struct UserRegistration {
  Bytes user_public_key;
  VirtualIdentity vid;
  Signature node_signature;  // over (user_public_key, vid) by a BCN node key
};

struct ContractRecord {
  std::string contract_id;
  VirtualIdentity vid;
  std::string cp_id;
  // On-demand contracts carry the content's metadata; flat-rate plans carry
  // only a plan tag and are skipped by feature extraction.
  std::optional<ContentMetadata> content;
  std::string plan_tag;
  std::uint64_t timestamp = 0;
};

struct Payment {
  std::string contract_id;
  VirtualIdentity vid;
  std::string cp_id;
  std::uint64_t amount = 0;
};

using Transaction =
    std::variant<CpRegistration, UserRegistration, ContractRecord, Payment>;

struct Block {
  std::uint64_t index = 0;
  Digest prev_digest;
  std::uint64_t timestamp = 0;  // simulated tick, never wall clock
  std::vector<Transaction> transactions;
  Digest digest;  // over (index, prev_digest, timestamp, transactions)
};

// Canonical serialization shared by block digests and chain export.
std::string serialize_transaction(const Transaction& tx);
std::optional<Transaction> parse_transaction(const std::string& line);
Digest block_digest(const crypto::Scheme& scheme, const Block& block);

/// Byte payload a user-registration node signature covers.
Bytes user_registration_payload(const Bytes& user_public_key,
                                const VirtualIdentity& vid);

/// Byte payload a CP signs when requesting the ledger history.
Bytes history_query_payload(const std::string& cp_id);

/// Append-only hash-chained block store with registration indexes and
/// token balances derived from Payment transactions. Exactly one writer
/// (the consensus commit path) may call append_block.
class Chain {
 public:
  explicit Chain(std::shared_ptr<const crypto::Scheme> scheme);

  // Public keys of BCN nodes whose signatures authorize user registrations.
  void authorize_node_key(const Bytes& node_public_key);

  /// Validates every transaction, then appends one block. Throws
  /// ValidationError naming the offending transaction; the chain is
  /// unchanged on failure.
  const Block& append_block(std::vector<Transaction> transactions,
                            std::uint64_t timestamp);

  /// True iff every block's digest recomputes and links correctly.
  bool verify() const;

  std::optional<Bytes> lookup_vid(const VirtualIdentity& vid) const;
  std::optional<Bytes> lookup_cp(const std::string& cp_id) const;

  /// Metadata of every on-demand ContractRecord in chain order, across all
  /// CPs. Caller must be a registered CP presenting a valid signature over
  /// history_query_payload(cp_id).
  std::vector<ContentMetadata> query_request_history(
      const std::string& requester_cp_id, const Signature& signature) const;

  /// Same projection without the authorization gate (internal use).
  std::vector<ContentMetadata> request_history_unchecked() const;

  std::int64_t balance_of_vid(const VirtualIdentity& vid) const;
  void credit_vid(const VirtualIdentity& vid, std::int64_t amount);

  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t transaction_count() const;
  const crypto::Scheme& scheme() const { return *scheme_; }

  void export_to(std::ostream& out) const;
  /// Parses a dumped chain without revalidating transactions; digests are
  /// taken from the file so verify() exposes any tampering.
  static std::optional<Chain> import_from(
      std::istream& in, std::shared_ptr<const crypto::Scheme> scheme);

 private:
  void validate(const Transaction& tx, std::size_t position,
                const std::vector<Transaction>& batch) const;
  void index_block(const Block& block);

  std::shared_ptr<const crypto::Scheme> scheme_;
  std::vector<Block> blocks_;
  std::map<Digest, Bytes> vid_index_;
  std::map<std::string, Bytes> cp_index_;
  std::map<Digest, std::int64_t> vid_balances_;
  std::map<std::string, std::int64_t> cp_balances_;
  std::vector<Bytes> node_keys_;
};

}  // namespace bcdn::ledger

#endif
