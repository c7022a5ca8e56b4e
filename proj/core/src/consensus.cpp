#include "bcdn/consensus.hpp"

#include <sstream>

namespace bcdn::consensus {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::PrePrepare:
      return "pre-prepare";
    case Phase::Prepare:
      return "prepare";
    case Phase::Commit:
      return "commit";
  }
  return "?";
}

Bytes message_payload(const ConsensusMessage& msg) {
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(msg.phase));
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<std::uint8_t>(msg.view >> (8 * i)));
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<std::uint8_t>(msg.sequence >> (8 * i)));
  out.insert(out.end(), msg.block_digest.bytes.begin(),
             msg.block_digest.bytes.end());
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<std::uint8_t>(msg.sender >> (8 * i)));
  return out;
}

SimulatedNetwork::SimulatedNetwork(const NetworkParams& params)
    : params_(params), rng_(params.seed) {}

void SimulatedNetwork::send(int to, const ConsensusMessage& msg,
                            std::uint64_t now) {
  if (params_.drop_probability > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng_) < params_.drop_probability) return;
  }
  std::uniform_int_distribution<std::uint32_t> delay(params_.min_delay,
                                                     params_.max_delay);
  queue_.push(InFlight{now + delay(rng_), next_id_++, to, msg});
}

std::vector<std::pair<int, ConsensusMessage>> SimulatedNetwork::deliver_due(
    std::uint64_t tick) {
  std::vector<std::pair<int, ConsensusMessage>> out;
  while (!queue_.empty() && queue_.top().delivery_tick <= tick) {
    out.emplace_back(queue_.top().to, queue_.top().msg);
    queue_.pop();
  }
  return out;
}

Validator::Validator(int id, int n_val, Behavior behavior, crypto::KeyPair keys,
                     std::uint64_t timeout_ticks,
                     std::shared_ptr<const crypto::Scheme> scheme)
    : id_(id),
      n_val_(n_val),
      behavior_(behavior),
      keys_(std::move(keys)),
      timeout_(timeout_ticks),
      scheme_(std::move(scheme)) {}

bool Validator::is_primary() const {
  return static_cast<int>(view_ % n_val_) == id_;
}

ConsensusMessage Validator::make_message(Phase phase, std::uint64_t view,
                                         std::uint64_t sequence,
                                         const Digest& digest) const {
  ConsensusMessage msg;
  msg.phase = phase;
  msg.view = view;
  msg.sequence = sequence;
  msg.block_digest = digest;
  msg.sender = id_;
  msg.signature =
      scheme_->sign(keys_.private_key, crypto::as_span(message_payload(msg)));
  return msg;
}

std::vector<Outgoing> Validator::broadcast(Phase phase, std::uint64_t view,
                                           std::uint64_t sequence,
                                           const Digest& digest) const {
  std::vector<Outgoing> out;
  if (behavior_ == Behavior::Silent) return out;
  if (behavior_ == Behavior::Equivocating) {
    // Conflicting digests split deterministically: even-id peers get the
    // real digest, odd-id peers a corrupted one.
    Digest alt = digest;
    alt.bytes[0] ^= 1;
    for (int peer = 0; peer < n_val_; ++peer) {
      if (peer == id_) continue;
      out.push_back(
          {peer, make_message(phase, view, sequence,
                              (peer % 2 == 0) ? digest : alt)});
    }
    return out;
  }
  for (int peer = 0; peer < n_val_; ++peer) {
    if (peer == id_) continue;
    out.push_back({peer, make_message(phase, view, sequence, digest)});
  }
  return out;
}

void Validator::set_pending(std::uint64_t sequence, const Digest& digest) {
  pending_seq_ = sequence;
  pending_digest_ = digest;
  waiting_ticks_ = 0;
}

std::vector<Outgoing> Validator::propose(std::uint64_t sequence) {
  if (!is_primary())
    throw ProtocolViolation("validator " + std::to_string(id_) +
                            " is not the primary of view " +
                            std::to_string(view_));
  if (!pending_seq_ || *pending_seq_ != sequence)
    throw ProtocolViolation("no pending block for sequence " +
                            std::to_string(sequence));
  if (behavior_ == Behavior::Silent) return {};

  // The primary's own pre-prepare counts as its acceptance.
  accepted_[{view_, sequence}] = pending_digest_;
  log_[{view_, sequence, static_cast<int>(Phase::Prepare)}][id_] =
      pending_digest_;
  auto out = broadcast(Phase::PrePrepare, view_, sequence, pending_digest_);
  auto prepares = broadcast(Phase::Prepare, view_, sequence, pending_digest_);
  out.insert(out.end(), prepares.begin(), prepares.end());
  return out;
}

std::vector<Outgoing> Validator::maybe_progress(std::uint64_t view,
                                                std::uint64_t sequence) {
  std::vector<Outgoing> out;
  auto acc = accepted_.find({view, sequence});
  if (acc == accepted_.end()) return out;
  const Digest& digest = acc->second;
  int quorum = 2 * ((n_val_ - 1) / 3) + 1;

  Key prep_key{view, sequence, static_cast<int>(Phase::Prepare)};
  int prepares = 0;
  for (const auto& [sender, d] : log_[prep_key])
    if (d == digest) ++prepares;
  if (prepares >= quorum && !sent_[prep_key]) {
    sent_[prep_key] = true;
    log_[{view, sequence, static_cast<int>(Phase::Commit)}][id_] = digest;
    auto commits = broadcast(Phase::Commit, view, sequence, digest);
    out.insert(out.end(), commits.begin(), commits.end());
  }

  Key commit_key{view, sequence, static_cast<int>(Phase::Commit)};
  int commits = 0;
  for (const auto& [sender, d] : log_[commit_key])
    if (d == digest) ++commits;
  if (commits >= quorum && !committed_.count(sequence)) {
    committed_[sequence] = digest;
    if (pending_seq_ && *pending_seq_ == sequence) {
      pending_seq_.reset();
      waiting_ticks_ = 0;
    }
  }
  return out;
}

std::vector<Outgoing> Validator::handle_message(
    const ConsensusMessage& msg, const std::vector<Bytes>& peer_keys) {
  std::vector<Outgoing> out;
  if (msg.sender < 0 || msg.sender >= n_val_ || msg.sender == id_) {
    ++dropped_;
    return out;
  }
  if (!scheme_->verify(peer_keys[msg.sender],
                       crypto::as_span(message_payload(msg)),
                       msg.signature)) {
    ++dropped_;
    return out;
  }
  if (behavior_ == Behavior::Silent) return out;  // receives, never reacts

  if (msg.phase == Phase::PrePrepare) {
    bool from_primary =
        static_cast<int>(msg.view % n_val_) == msg.sender;
    bool matches_pending =
        pending_seq_ && *pending_seq_ == msg.sequence &&
        msg.block_digest == pending_digest_;
    if (!from_primary || msg.view != view_ ||
        accepted_.count({msg.view, msg.sequence}) || !matches_pending) {
      ++dropped_;
      return out;
    }
    accepted_[{msg.view, msg.sequence}] = msg.block_digest;
    log_[{msg.view, msg.sequence, static_cast<int>(Phase::Prepare)}][id_] =
        msg.block_digest;
    out = broadcast(Phase::Prepare, msg.view, msg.sequence, msg.block_digest);
    auto more = maybe_progress(msg.view, msg.sequence);
    out.insert(out.end(), more.begin(), more.end());
    return out;
  }

  log_[{msg.view, msg.sequence, static_cast<int>(msg.phase)}][msg.sender] =
      msg.block_digest;
  return maybe_progress(msg.view, msg.sequence);
}

std::vector<Outgoing> Validator::on_tick() {
  std::vector<Outgoing> out;
  if (!pending_seq_) return out;
  ++waiting_ticks_;
  if (waiting_ticks_ <= timeout_) return out;
  // View change: give up on the current primary and move on. The pending
  // block is re-proposed by whoever is primary in the new view.
  ++view_;
  waiting_ticks_ = 0;
  if (behavior_ == Behavior::Honest && is_primary())
    out = propose(*pending_seq_);
  return out;
}

PbftSim::PbftSim(const PbftConfig& config)
    : config_(config),
      scheme_(crypto::make_scheme(config.scheme)),
      network_(config.network) {
  if (config.n_val < 1 || (config.n_val - 1) % 3 != 0)
    throw std::invalid_argument("n_val must be 3f + 1");
  std::vector<Behavior> behaviors = config.behaviors;
  behaviors.resize(config.n_val, Behavior::Honest);
  for (int i = 0; i < config.n_val; ++i) {
    auto keys = scheme_->generate_keypair(config.network.seed * 1000003 + i);
    peer_keys_.push_back(keys.public_key);
    validators_.emplace_back(i, config.n_val, behaviors[i], std::move(keys),
                             config.view_change_timeout, scheme_);
  }
}

void PbftSim::route(int from, const std::vector<Outgoing>& out) {
  for (const auto& o : out) {
    if (o.to >= 0) {
      network_.send(o.to, o.msg, tick_);
    } else {
      for (int peer = 0; peer < n_val(); ++peer)
        if (peer != from) network_.send(peer, o.msg, tick_);
    }
    std::ostringstream line;
    line << tick_ << ' ' << from << ' ' << phase_name(o.msg.phase) << ' '
         << o.msg.view << ' ' << o.msg.sequence << ' '
         << o.msg.block_digest.hex();
    event_log_.push_back(line.str());
  }
}

std::uint64_t PbftSim::submit_block(const Digest& digest) {
  std::uint64_t seq = next_sequence_++;
  for (auto& v : validators_) v.set_pending(seq, digest);
  for (auto& v : validators_) {
    if (v.is_primary()) {
      route(v.id(), v.propose(seq));
      break;
    }
  }
  return seq;
}

void PbftSim::advance_tick() {
  ++tick_;
  for (auto& [to, msg] : network_.deliver_due(tick_))
    route(to, validators_[to].handle_message(msg, peer_keys_));
  for (auto& v : validators_) route(v.id(), v.on_tick());
}

std::optional<Digest> PbftSim::run_until_committed(std::uint64_t sequence,
                                                   std::uint64_t max_ticks) {
  std::uint64_t deadline = tick_ + max_ticks;
  auto all_honest_committed = [&]() -> std::optional<Digest> {
    std::optional<Digest> digest;
    for (const auto& v : validators_) {
      if (v.behavior() != Behavior::Honest) continue;
      auto it = v.committed().find(sequence);
      if (it == v.committed().end()) return std::nullopt;
      if (!digest) digest = it->second;
    }
    return digest;
  };
  while (tick_ < deadline) {
    if (auto d = all_honest_committed()) return d;
    advance_tick();
  }
  return all_honest_committed();
}

bool PbftSim::safety_holds() const {
  std::map<std::uint64_t, Digest> seen;
  for (const auto& v : validators_) {
    if (v.behavior() != Behavior::Honest) continue;
    for (const auto& [seq, digest] : v.committed()) {
      auto [it, inserted] = seen.emplace(seq, digest);
      if (!inserted && it->second != digest) return false;
    }
  }
  return true;
}

}  // namespace bcdn::consensus
