#include "bcdn/protocol.hpp"

#include <cstring>

namespace bcdn::protocol {

namespace {

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

Bytes v1_payload(const VirtualIdentity& vid, std::uint64_t nonce) {
  Bytes out(vid.bytes.begin(), vid.bytes.end());
  put_u64(out, nonce);
  return out;
}

Bytes v2_plaintext(const VirtualIdentity& vid, std::uint64_t nonce_plus_1,
                   const Bytes& cp_public_key) {
  Bytes out(vid.bytes.begin(), vid.bytes.end());
  put_u64(out, nonce_plus_1);
  out.insert(out.end(), cp_public_key.begin(), cp_public_key.end());
  return out;
}

Bytes v3_plaintext(const VirtualIdentity& vid, std::uint64_t nonce_plus_2) {
  Bytes out(vid.bytes.begin(), vid.bytes.end());
  put_u64(out, nonce_plus_2);
  return out;
}

}  // namespace

const char* fail_reason_name(FailReason r) {
  switch (r) {
    case FailReason::UnknownVid:
      return "unknown-vid";
    case FailReason::BadSignature:
      return "bad-signature";
    case FailReason::BadNonce:
      return "bad-nonce";
    case FailReason::BadCiphertext:
      return "bad-ciphertext";
  }
  return "?";
}

Bcn::Bcn(const Options& options)
    : scheme_(crypto::make_scheme(options.scheme)),
      node_keys_(scheme_->generate_keypair(options.node_key_seed)),
      chain_(scheme_),
      options_(options) {
  chain_.authorize_node_key(node_keys_.public_key);
  if (options_.use_consensus) {
    auto cfg = options_.consensus_config;
    cfg.scheme = options_.scheme;
    pbft_ = std::make_unique<consensus::PbftSim>(cfg);
  }
}

void Bcn::submit(ledger::Transaction tx) { mempool_.push_back(std::move(tx)); }

std::optional<std::uint64_t> Bcn::flush() {
  if (mempool_.empty()) return std::nullopt;
  if (pbft_) {
    ledger::Block candidate;
    candidate.index = chain_.blocks().size();
    candidate.prev_digest = chain_.blocks().back().digest;
    candidate.timestamp = tick_;
    candidate.transactions = mempool_;
    auto digest = ledger::block_digest(*scheme_, candidate);
    auto seq = pbft_->submit_block(digest);
    auto committed = pbft_->run_until_committed(
        seq, 2 * options_.consensus_config.view_change_timeout +
                 options_.consensus_config.network.max_delay);
    if (!committed || *committed != digest)
      throw std::runtime_error("consensus failed to commit block");
  }
  auto txs = std::move(mempool_);
  mempool_.clear();
  const auto& block = chain_.append_block(std::move(txs), tick_);
  last_cut_ = tick_;
  return block.index;
}

void Bcn::tick() {
  ++tick_;
  if (tick_ - last_cut_ >= options_.block_interval && !mempool_.empty())
    flush();
}

UserAccount UserAccount::create(const crypto::Scheme& scheme,
                                std::uint64_t seed) {
  UserAccount user;
  user.keypair = scheme.generate_keypair(seed);
  user.vid = crypto::derive_vid(scheme, user.keypair.public_key);
  return user;
}

void register_cp(CpAccount& cp, Bcn& bcn) {
  if (cp.registered || bcn.chain().lookup_cp(cp.cp_id))
    throw ledger::ValidationError("duplicate CP registration " + cp.cp_id);
  ledger::CpRegistration tx;
  tx.cp_id = cp.cp_id;
  tx.cp_public_key = cp.keypair.public_key;
  tx.address = cp.address;
  tx.public_info = cp.public_info;
  bcn.submit(tx);
  bcn.flush();
  cp.registered = true;
}

void register_user(UserAccount& user, Bcn& bcn) {
  ledger::UserRegistration tx;
  tx.user_public_key = user.keypair.public_key;
  tx.vid = user.vid;
  auto payload = ledger::user_registration_payload(tx.user_public_key, tx.vid);
  tx.node_signature =
      bcn.scheme().sign(bcn.node_keys().private_key, crypto::as_span(payload));
  bcn.submit(tx);
  bcn.flush();
  user.registered = true;
}

V1 auth_initiate(const UserAccount& user, UserSession& session,
                 std::uint64_t nonce, const crypto::Scheme& scheme) {
  V1 v1;
  v1.vid = user.vid;
  v1.nonce = nonce;
  v1.signature = scheme.sign(user.keypair.private_key,
                             crypto::as_span(v1_payload(user.vid, nonce)));
  session.state = AuthState::V1Sent;
  session.vid = user.vid;
  session.nonce = nonce;
  return v1;
}

std::variant<V2, FailReason> auth_respond(const CpAccount& cp,
                                          CpSession& session, const V1& v1,
                                          const Bcn& bcn) {
  auto fail = [&](FailReason r) {
    session.state = AuthState::Failed;
    session.failure = r;
    return r;
  };
  auto user_pub = bcn.chain().lookup_vid(v1.vid);
  if (!user_pub) return fail(FailReason::UnknownVid);
  if (!bcn.scheme().verify(*user_pub,
                           crypto::as_span(v1_payload(v1.vid, v1.nonce)),
                           v1.signature))
    return fail(FailReason::BadSignature);

  // Only now, after the BCN validated the vid, does the CP learn the
  // user's public key.
  session.user_public_key = *user_pub;
  session.vid = v1.vid;
  session.nonce = v1.nonce;
  session.state = AuthState::V2Sent;

  V2 v2;
  v2.vid = v1.vid;
  v2.nonce_plus_1 = v1.nonce + 1;  // modulo 2^64 by unsigned arithmetic
  v2.ciphertext = bcn.scheme().encrypt(
      *user_pub, crypto::as_span(v2_plaintext(v1.vid, v2.nonce_plus_1,
                                              cp.keypair.public_key)));
  return v2;
}

std::variant<V3, FailReason> auth_confirm(const UserAccount& user,
                                          UserSession& session, const V2& v2,
                                          const crypto::Scheme& scheme) {
  auto fail = [&](FailReason r) {
    session.state = AuthState::Failed;
    session.failure = r;
    return r;
  };
  if (session.state != AuthState::V1Sent) return fail(FailReason::BadNonce);

  auto plain = scheme.decrypt(user.keypair.private_key, v2.ciphertext);
  if (!plain || plain->size() < crypto::kDigestLen + 8)
    return fail(FailReason::BadCiphertext);

  VirtualIdentity vid;
  std::memcpy(vid.bytes.data(), plain->data(), crypto::kDigestLen);
  std::uint64_t nonce = get_u64(plain->data() + crypto::kDigestLen);
  std::uint64_t expected = session.nonce + 1;
  if (vid != session.vid || nonce != expected ||
      v2.nonce_plus_1 != expected)
    return fail(FailReason::BadNonce);

  session.cp_public_key.assign(plain->begin() + crypto::kDigestLen + 8,
                               plain->end());
  session.state = AuthState::Authenticated;

  V3 v3;
  v3.vid = session.vid;
  v3.nonce_plus_2 = session.nonce + 2;
  v3.ciphertext = scheme.encrypt(
      session.cp_public_key,
      crypto::as_span(v3_plaintext(session.vid, v3.nonce_plus_2)));
  return v3;
}

std::variant<AuthState, FailReason> auth_finalize(const CpAccount& cp,
                                                  CpSession& session,
                                                  const V3& v3,
                                                  const crypto::Scheme& scheme) {
  auto fail = [&](FailReason r) {
    session.state = AuthState::Failed;
    session.failure = r;
    return r;
  };
  if (session.state != AuthState::V2Sent) return fail(FailReason::BadNonce);

  auto plain = scheme.decrypt(cp.keypair.private_key, v3.ciphertext);
  if (!plain || plain->size() != crypto::kDigestLen + 8)
    return fail(FailReason::BadCiphertext);

  VirtualIdentity vid;
  std::memcpy(vid.bytes.data(), plain->data(), crypto::kDigestLen);
  std::uint64_t nonce = get_u64(plain->data() + crypto::kDigestLen);
  std::uint64_t expected = session.nonce + 2;
  if (vid != session.vid || nonce != expected || v3.nonce_plus_2 != expected)
    return fail(FailReason::BadNonce);

  session.state = AuthState::Authenticated;
  return AuthState::Authenticated;
}

SmartContract run_contract(const UserAccount& user, const CpAccount& cp,
                           const ServiceRequest& service, Bcn& bcn,
                           const std::string& contract_id, bool flush) {
  SmartContract contract;
  contract.contract_id = contract_id;
  contract.vid = user.vid;
  contract.cp_id = cp.cp_id;
  contract.content = service.content;
  contract.plan_tag = service.plan_tag;
  contract.fee = service.fee;

  // Requested: CP verifies the vid and that the service is its own.
  if (!bcn.chain().lookup_vid(user.vid)) {
    contract.failure = "unverified vid";
    return contract;
  }
  if (service.content && service.content->cp_id != cp.cp_id) {
    contract.failure = "service not offered by " + cp.cp_id;
    return contract;
  }
  if (!service.content && service.plan_tag.empty()) {
    contract.failure = "empty service request";
    return contract;
  }

  contract.state = ContractState::PaymentRequested;
  if (bcn.chain().balance_of_vid(user.vid) <
      static_cast<std::int64_t>(contract.fee)) {
    contract.failure = "insufficient balance";
    return contract;
  }

  ledger::Payment payment;
  payment.contract_id = contract.contract_id;
  payment.vid = user.vid;
  payment.cp_id = cp.cp_id;
  payment.amount = contract.fee;
  bcn.submit(payment);
  contract.state = ContractState::Paid;

  contract.state = ContractState::Delivered;

  ledger::ContractRecord record;
  record.contract_id = contract.contract_id;
  record.vid = user.vid;
  record.cp_id = cp.cp_id;
  record.content = service.content;
  record.plan_tag = service.plan_tag;
  record.timestamp = bcn.now();
  contract.timestamp = record.timestamp;
  bcn.submit(record);

  if (flush) {
    bcn.flush();
    contract.state = ContractState::Committed;
  }
  return contract;
}

}  // namespace bcdn::protocol
