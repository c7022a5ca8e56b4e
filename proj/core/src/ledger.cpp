#include "bcdn/ledger.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace bcdn::ledger {

namespace {

std::string hex_field(const std::string& s) {
  return crypto::to_hex(crypto::as_span(s));
}

std::optional<std::string> unhex_string(const std::string& s) {
  auto raw = crypto::from_hex(s);
  if (!raw) return std::nullopt;
  return std::string(raw->begin(), raw->end());
}

std::string bits_field(const FeatureVector& f) {
  std::string out;
  out.reserve(f.length());
  for (auto b : f.bits) out.push_back(b ? '1' : '0');
  return out.empty() ? "-" : out;
}

std::optional<FeatureVector> parse_bits(const std::string& s) {
  FeatureVector f;
  if (s == "-") return f;
  f.bits.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') return std::nullopt;
    f.bits.push_back(c == '1');
  }
  return f;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::optional<std::uint64_t> parse_u64(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

}  // namespace

std::string serialize_transaction(const Transaction& tx) {
  std::ostringstream os;
  if (const auto* cp = std::get_if<CpRegistration>(&tx)) {
    os << "CPR " << hex_field(cp->cp_id) << ' '
       << crypto::to_hex(crypto::as_span(cp->cp_public_key)) << ' '
       << hex_field(cp->address) << ' ' << hex_field(cp->public_info);
  } else if (const auto* ur = std::get_if<UserRegistration>(&tx)) {
    os << "USR " << crypto::to_hex(crypto::as_span(ur->user_public_key)) << ' '
       << ur->vid.hex() << ' '
       << crypto::to_hex(crypto::as_span(ur->node_signature.sig));
  } else if (const auto* cr = std::get_if<ContractRecord>(&tx)) {
    os << "CTR " << hex_field(cr->contract_id) << ' ' << cr->vid.hex() << ' '
       << hex_field(cr->cp_id) << ' ';
    if (cr->content) {
      os << "1 " << hex_field(cr->content->content_id) << ' '
         << bits_field(cr->content->features) << ' '
         << hex_field(cr->content->cp_id);
    } else {
      os << "0 - - -";
    }
    os << ' ' << hex_field(cr->plan_tag) << ' ' << cr->timestamp;
  } else {
    const auto& p = std::get<Payment>(tx);
    os << "PAY " << hex_field(p.contract_id) << ' ' << p.vid.hex() << ' '
       << hex_field(p.cp_id) << ' ' << p.amount;
  }
  return os.str();
}

std::optional<Transaction> parse_transaction(const std::string& line) {
  auto tok = split(line, ' ');
  if (tok.empty()) return std::nullopt;
  if (tok[0] == "CPR" && tok.size() == 5) {
    CpRegistration cp;
    auto id = unhex_string(tok[1]);
    auto pub = crypto::from_hex(tok[2]);
    auto addr = unhex_string(tok[3]);
    auto info = unhex_string(tok[4]);
    if (!id || !pub || !addr || !info) return std::nullopt;
    cp.cp_id = *id;
    cp.cp_public_key = *pub;
    cp.address = *addr;
    cp.public_info = *info;
    return Transaction{cp};
  }
  if (tok[0] == "USR" && tok.size() == 4) {
    UserRegistration ur;
    auto pub = crypto::from_hex(tok[1]);
    auto vid = Digest::from_hex(tok[2]);
    auto sig = crypto::from_hex(tok[3]);
    if (!pub || !vid || !sig) return std::nullopt;
    ur.user_public_key = *pub;
    ur.vid = *vid;
    ur.node_signature.sig = *sig;
    return Transaction{ur};
  }
  if (tok[0] == "CTR" && tok.size() == 10) {
    ContractRecord cr;
    auto cid = unhex_string(tok[1]);
    auto vid = Digest::from_hex(tok[2]);
    auto cp = unhex_string(tok[3]);
    auto plan = unhex_string(tok[8]);
    auto ts = parse_u64(tok[9]);
    if (!cid || !vid || !cp || !plan || !ts) return std::nullopt;
    cr.contract_id = *cid;
    cr.vid = *vid;
    cr.cp_id = *cp;
    cr.plan_tag = *plan;
    cr.timestamp = *ts;
    if (tok[4] == "1") {
      ContentMetadata meta;
      auto content_id = unhex_string(tok[5]);
      auto bits = parse_bits(tok[6]);
      auto owner = unhex_string(tok[7]);
      if (!content_id || !bits || !owner) return std::nullopt;
      meta.content_id = *content_id;
      meta.features = *bits;
      meta.cp_id = *owner;
      cr.content = std::move(meta);
    } else if (tok[4] != "0") {
      return std::nullopt;
    }
    return Transaction{cr};
  }
  if (tok[0] == "PAY" && tok.size() == 5) {
    Payment p;
    auto cid = unhex_string(tok[1]);
    auto vid = Digest::from_hex(tok[2]);
    auto cp = unhex_string(tok[3]);
    auto amount = parse_u64(tok[4]);
    if (!cid || !vid || !cp || !amount) return std::nullopt;
    p.contract_id = *cid;
    p.vid = *vid;
    p.cp_id = *cp;
    p.amount = *amount;
    return Transaction{p};
  }
  return std::nullopt;
}

static std::string block_preimage(const Block& block) {
  std::ostringstream os;
  os << block.index << '\x1f' << block.prev_digest.hex() << '\x1f'
     << block.timestamp;
  for (const auto& tx : block.transactions)
    os << '\x1e' << serialize_transaction(tx);
  return os.str();
}

Digest block_digest(const crypto::Scheme& scheme, const Block& block) {
  return scheme.hash(crypto::as_span(block_preimage(block)));
}

Bytes user_registration_payload(const Bytes& user_public_key,
                                const VirtualIdentity& vid) {
  Bytes payload = user_public_key;
  payload.insert(payload.end(), vid.bytes.begin(), vid.bytes.end());
  return payload;
}

Bytes history_query_payload(const std::string& cp_id) {
  std::string s = "ledger-query:" + cp_id;
  return Bytes(s.begin(), s.end());
}

Chain::Chain(std::shared_ptr<const crypto::Scheme> scheme)
    : scheme_(std::move(scheme)) {
  Block genesis;
  genesis.digest = block_digest(*scheme_, genesis);
  blocks_.push_back(std::move(genesis));
}

void Chain::authorize_node_key(const Bytes& node_public_key) {
  node_keys_.push_back(node_public_key);
}

void Chain::validate(const Transaction& tx, std::size_t position,
                     const std::vector<Transaction>& batch) const {
  auto reject = [&](const std::string& why) {
    throw ValidationError("transaction " + std::to_string(position) + " (" +
                          serialize_transaction(tx).substr(0, 3) +
                          "): " + why);
  };

  // Earlier transactions in the same batch may introduce the vids and CPs
  // later ones refer to.
  auto vid_known = [&](const VirtualIdentity& vid) {
    if (vid_index_.count(vid)) return true;
    for (std::size_t i = 0; i < position; ++i)
      if (const auto* ur = std::get_if<UserRegistration>(&batch[i]))
        if (ur->vid == vid) return true;
    return false;
  };
  auto cp_known = [&](const std::string& cp_id) {
    if (cp_index_.count(cp_id)) return true;
    for (std::size_t i = 0; i < position; ++i)
      if (const auto* cp = std::get_if<CpRegistration>(&batch[i]))
        if (cp->cp_id == cp_id) return true;
    return false;
  };

  if (const auto* cp = std::get_if<CpRegistration>(&tx)) {
    if (cp->cp_id.empty()) reject("empty cp_id");
    if (cp->cp_public_key.empty()) reject("empty public key");
    if (cp_known(cp->cp_id)) reject("duplicate CP registration " + cp->cp_id);
  } else if (const auto* ur = std::get_if<UserRegistration>(&tx)) {
    if (vid_known(ur->vid)) reject("duplicate user registration");
    if (crypto::derive_vid(*scheme_, ur->user_public_key) != ur->vid)
      reject("vid does not hash from the public key");
    bool ok = false;
    Bytes payload = user_registration_payload(ur->user_public_key, ur->vid);
    for (const auto& nk : node_keys_)
      if (scheme_->verify(nk, crypto::as_span(payload), ur->node_signature))
        ok = true;
    if (!ok) reject("node signature does not verify");
  } else if (const auto* cr = std::get_if<ContractRecord>(&tx)) {
    if (!vid_known(cr->vid)) reject("unknown vid in contract record");
    if (!cp_known(cr->cp_id)) reject("unknown cp_id " + cr->cp_id);
    if (!cr->content && cr->plan_tag.empty())
      reject("contract carries neither content nor plan tag");
  } else {
    const auto& p = std::get<Payment>(tx);
    if (!vid_known(p.vid)) reject("unknown vid in payment");
    if (!cp_known(p.cp_id)) reject("unknown cp_id " + p.cp_id);
  }
}

const Block& Chain::append_block(std::vector<Transaction> transactions,
                                 std::uint64_t timestamp) {
  for (std::size_t i = 0; i < transactions.size(); ++i)
    validate(transactions[i], i, transactions);

  Block block;
  block.index = blocks_.size();
  block.prev_digest = blocks_.back().digest;
  block.timestamp = timestamp;
  block.transactions = std::move(transactions);
  block.digest = block_digest(*scheme_, block);
  index_block(block);
  blocks_.push_back(std::move(block));
  return blocks_.back();
}

void Chain::index_block(const Block& block) {
  for (const auto& tx : block.transactions) {
    if (const auto* cp = std::get_if<CpRegistration>(&tx)) {
      cp_index_[cp->cp_id] = cp->cp_public_key;
    } else if (const auto* ur = std::get_if<UserRegistration>(&tx)) {
      vid_index_[ur->vid] = ur->user_public_key;
    } else if (const auto* p = std::get_if<Payment>(&tx)) {
      vid_balances_[p->vid] -= static_cast<std::int64_t>(p->amount);
      cp_balances_[p->cp_id] += static_cast<std::int64_t>(p->amount);
    }
  }
}

bool Chain::verify() const {
  if (blocks_.empty()) return false;
  if (!blocks_[0].prev_digest.is_zero()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const Block& b = blocks_[i];
    if (b.index != i) return false;
    if (i > 0 && b.prev_digest != blocks_[i - 1].digest) return false;
    if (block_digest(*scheme_, b) != b.digest) return false;
  }
  return true;
}

std::optional<Bytes> Chain::lookup_vid(const VirtualIdentity& vid) const {
  auto it = vid_index_.find(vid);
  if (it == vid_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<Bytes> Chain::lookup_cp(const std::string& cp_id) const {
  auto it = cp_index_.find(cp_id);
  if (it == cp_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<ContentMetadata> Chain::query_request_history(
    const std::string& requester_cp_id, const Signature& signature) const {
  auto pub = lookup_cp(requester_cp_id);
  if (!pub)
    throw AuthorizationError("unregistered CP " + requester_cp_id);
  Bytes payload = history_query_payload(requester_cp_id);
  if (!scheme_->verify(*pub, crypto::as_span(payload), signature))
    throw AuthorizationError("history query signature does not verify");
  return request_history_unchecked();
}

std::vector<ContentMetadata> Chain::request_history_unchecked() const {
  std::vector<ContentMetadata> out;
  for (const auto& block : blocks_)
    for (const auto& tx : block.transactions)
      if (const auto* cr = std::get_if<ContractRecord>(&tx))
        if (cr->content) out.push_back(*cr->content);
  return out;
}

std::int64_t Chain::balance_of_vid(const VirtualIdentity& vid) const {
  auto it = vid_balances_.find(vid);
  return it == vid_balances_.end() ? 0 : it->second;
}

void Chain::credit_vid(const VirtualIdentity& vid, std::int64_t amount) {
  vid_balances_[vid] += amount;
}

std::size_t Chain::transaction_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += b.transactions.size();
  return n;
}

void Chain::export_to(std::ostream& out) const {
  for (const auto& b : blocks_) {
    out << b.index << ' ' << b.prev_digest.hex() << ' ' << b.timestamp << ' '
        << b.digest.hex() << ' ' << b.transactions.size();
    for (const auto& tx : b.transactions)
      out << '|' << serialize_transaction(tx);
    out << '\n';
  }
}

std::optional<Chain> Chain::import_from(
    std::istream& in, std::shared_ptr<const crypto::Scheme> scheme) {
  Chain chain(scheme);
  chain.blocks_.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto parts = split(line, '|');
    auto head = split(parts[0], ' ');
    if (head.size() != 5) return std::nullopt;
    Block b;
    auto idx = parse_u64(head[0]);
    auto prev = Digest::from_hex(head[1]);
    auto ts = parse_u64(head[2]);
    auto dig = Digest::from_hex(head[3]);
    auto ntx = parse_u64(head[4]);
    if (!idx || !prev || !ts || !dig || !ntx) return std::nullopt;
    if (*ntx != parts.size() - 1) return std::nullopt;
    b.index = *idx;
    b.prev_digest = *prev;
    b.timestamp = *ts;
    b.digest = *dig;
    for (std::size_t i = 1; i < parts.size(); ++i) {
      auto tx = parse_transaction(parts[i]);
      if (!tx) return std::nullopt;
      b.transactions.push_back(std::move(*tx));
    }
    chain.blocks_.push_back(std::move(b));
  }
  if (chain.blocks_.empty()) return std::nullopt;
  for (const auto& b : chain.blocks_) chain.index_block(b);
  return chain;
}

}  // namespace bcdn::ledger

namespace bcdn {
std::string feature_vector_to_string(const FeatureVector& f) {
  std::string out;
  out.reserve(f.length());
  for (auto b : f.bits) out.push_back(b ? '1' : '0');
  return out;
}
}  // namespace bcdn
