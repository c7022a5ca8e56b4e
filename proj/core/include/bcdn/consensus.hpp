#ifndef BCDN_CONSENSUS_HPP
#define BCDN_CONSENSUS_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "bcdn/crypto.hpp"

namespace bcdn::consensus {

using crypto::Bytes;
using crypto::Digest;
using crypto::Signature;

struct ProtocolViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Phase { PrePrepare, Prepare, Commit };
enum class Behavior { Honest, Silent, Equivocating };

const char* phase_name(Phase p);

struct ConsensusMessage {
  Phase phase = Phase::PrePrepare;
  std::uint64_t view = 0;
  std::uint64_t sequence = 0;
  Digest block_digest;
  int sender = 0;
  Signature signature;  // over (phase, view, sequence, digest, sender)
};

Bytes message_payload(const ConsensusMessage& msg);

struct NetworkParams {
  std::uint32_t min_delay = 1;  // ticks
  std::uint32_t max_delay = 5;
  double drop_probability = 0.0;
  std::uint64_t seed = 0;
};

/// Deterministic message scheduler: same seed and send sequence yields the
/// same delivery schedule.
class SimulatedNetwork {
 public:
  explicit SimulatedNetwork(const NetworkParams& params);

  void send(int to, const ConsensusMessage& msg, std::uint64_t now);
  std::vector<std::pair<int, ConsensusMessage>> deliver_due(std::uint64_t tick);
  bool idle() const { return queue_.empty(); }

 private:
  struct InFlight {
    std::uint64_t delivery_tick;
    std::uint64_t id;  // tiebreak, assigned in send order
    int to;
    ConsensusMessage msg;
    bool operator>(const InFlight& o) const {
      return std::tie(delivery_tick, id) > std::tie(o.delivery_tick, o.id);
    }
  };
  NetworkParams params_;
  std::mt19937_64 rng_;
  std::uint64_t next_id_ = 0;
  std::priority_queue<InFlight, std::vector<InFlight>, std::greater<>> queue_;
};

struct Outgoing {
  int to = -1;  // -1 = broadcast to every other validator
  ConsensusMessage msg;
};

/// One validator's replicated state machine. An honest validator never sends
/// two different Prepare/Commit messages for the same (view, sequence).
class Validator {
 public:
  Validator(int id, int n_val, Behavior behavior, crypto::KeyPair keys,
            std::uint64_t timeout_ticks,
            std::shared_ptr<const crypto::Scheme> scheme);

  /// Called on the primary when a new block is submitted; returns the
  /// PrePrepare broadcast. Throws ProtocolViolation if this validator is not
  /// the primary of its current view.
  std::vector<Outgoing> propose(std::uint64_t sequence);

  /// Standard PBFT progression. Bad signatures and digest mismatches are
  /// dropped (and counted), never acted on.
  std::vector<Outgoing> handle_message(const ConsensusMessage& msg,
                                       const std::vector<Bytes>& peer_keys);

  /// Per-tick timer maintenance; on view-change timeout the validator moves
  /// to the next view and, if it became primary, re-proposes.
  std::vector<Outgoing> on_tick();

  void set_pending(std::uint64_t sequence, const Digest& digest);
  bool is_primary() const;

  int id() const { return id_; }
  Behavior behavior() const { return behavior_; }
  std::uint64_t current_view() const { return view_; }
  const Bytes& public_key() const { return keys_.public_key; }
  const std::map<std::uint64_t, Digest>& committed() const {
    return committed_;
  }
  std::uint64_t dropped_messages() const { return dropped_; }

 private:
  ConsensusMessage make_message(Phase phase, std::uint64_t view,
                                std::uint64_t sequence,
                                const Digest& digest) const;
  std::vector<Outgoing> broadcast(Phase phase, std::uint64_t view,
                                  std::uint64_t sequence,
                                  const Digest& digest) const;
  std::vector<Outgoing> maybe_progress(std::uint64_t view,
                                       std::uint64_t sequence);

  int id_;
  int n_val_;
  Behavior behavior_;
  crypto::KeyPair keys_;
  std::uint64_t timeout_;
  std::shared_ptr<const crypto::Scheme> scheme_;

  std::uint64_t view_ = 0;
  std::optional<std::uint64_t> pending_seq_;
  Digest pending_digest_;
  std::uint64_t waiting_ticks_ = 0;

  struct Key {
    std::uint64_t view, sequence;
    int phase;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, std::map<int, Digest>> log_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, Digest> accepted_;
  std::map<Key, bool> sent_;
  std::map<std::uint64_t, Digest> committed_;
  std::uint64_t dropped_ = 0;
};

struct PbftConfig {
  int n_val = 4;  // 3f + 1
  std::vector<Behavior> behaviors;  // defaults to all Honest
  NetworkParams network;
  std::uint64_t view_change_timeout = 50;  // ticks
  crypto::SchemeKind scheme = crypto::SchemeKind::Fast;
};

/// Single-threaded deterministic event loop driving N_val validators over a
/// simulated network, one agreement per sequence number.
class PbftSim {
 public:
  explicit PbftSim(const PbftConfig& config);

  /// Announces the candidate block digest to every validator (client
  /// broadcast) and lets the current primary propose.
  std::uint64_t submit_block(const Digest& digest);

  /// One simulated tick: deliver due messages, then fire timers.
  void advance_tick();

  /// Runs until every honest validator committed `sequence` or `max_ticks`
  /// elapsed. Returns the committed digest on success.
  std::optional<Digest> run_until_committed(std::uint64_t sequence,
                                            std::uint64_t max_ticks);

  /// No two honest validators committed different digests at any sequence.
  bool safety_holds() const;

  std::uint64_t tick() const { return tick_; }
  int f() const { return (n_val() - 1) / 3; }
  int n_val() const { return static_cast<int>(validators_.size()); }
  const Validator& validator(int id) const { return validators_[id]; }
  Validator& validator(int id) { return validators_[id]; }
  const std::vector<std::string>& event_log() const { return event_log_; }

 private:
  void route(int from, const std::vector<Outgoing>& out);

  PbftConfig config_;
  std::shared_ptr<const crypto::Scheme> scheme_;
  std::vector<Validator> validators_;
  std::vector<Bytes> peer_keys_;
  SimulatedNetwork network_;
  std::uint64_t tick_ = 0;
  std::uint64_t next_sequence_ = 0;
  std::vector<std::string> event_log_;
};

}  // namespace bcdn::consensus

#endif
