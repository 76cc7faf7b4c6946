#include "ptb/transport.hpp"

#include <algorithm>
#include <bit>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <sstream>

namespace ptb {

namespace {

template <class T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(std::uint8_t(std::uint64_t(v) >> (8 * b)));
}

template <class T>
T get_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) v |= std::uint64_t(p[b]) << (8 * b);
  return T(v);
}

}  // namespace

Message make_message(std::uint32_t sweep, int phase, int side, int depth, std::vector<double> payload) {
  if (phase < 0 || phase > 2) throw std::invalid_argument("phase must be 0, 1 or 2");
  if (side < 0 || side > 1) throw std::invalid_argument("side must be 0 or 1");
  if (depth < 0 || depth > 0xffff) throw std::invalid_argument("depth does not fit in 16 bits");
  Message m;
  m.header.sweep = sweep;
  m.header.phase = std::uint8_t(phase);
  m.header.side = std::uint8_t(side);
  m.header.depth = std::uint16_t(depth);
  m.header.payload_len = 8 * std::uint64_t(payload.size());
  m.payload = std::move(payload);
  return m;
}

std::vector<std::uint8_t> encode(const Message& m) {
  if (m.header.payload_len != 8 * std::uint64_t(m.payload.size()))
    throw ProtocolError("payload_len does not match payload size");
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + m.payload.size() * 8);
  put_le(out, m.header.magic);
  put_le(out, m.header.sweep);
  put_le(out, m.header.phase);
  put_le(out, m.header.side);
  put_le(out, m.header.depth);
  put_le(out, m.header.payload_len);
  for (double d : m.payload) put_le(out, std::bit_cast<std::uint64_t>(d));
  return out;
}

Message decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw ProtocolError("message shorter than its header");
  const std::uint8_t* p = bytes.data();
  Message m;
  m.header.magic = get_le<std::uint32_t>(p);
  m.header.sweep = get_le<std::uint32_t>(p + 4);
  m.header.phase = p[8];
  m.header.side = p[9];
  m.header.depth = get_le<std::uint16_t>(p + 10);
  m.header.payload_len = get_le<std::uint64_t>(p + 12);
  if (m.header.magic != kWireMagic) throw ProtocolError("bad magic");
  if (m.header.payload_len % 8 != 0 || m.header.payload_len != bytes.size() - kHeaderBytes)
    throw ProtocolError("payload length mismatch");
  m.payload.resize(m.header.payload_len / 8);
  for (std::size_t i = 0; i < m.payload.size(); ++i)
    m.payload[i] = std::bit_cast<double>(get_le<std::uint64_t>(p + kHeaderBytes + 8 * i));
  return m;
}

struct LoopbackWorld::Channel {
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<std::vector<std::uint8_t>> queue;
};

LoopbackWorld::LoopbackWorld(int ranks) : ranks_(ranks) {
  if (ranks < 1) throw std::invalid_argument("a world needs at least one rank");
  channels_.reserve(std::size_t(ranks) * std::size_t(ranks));
  for (int i = 0; i < ranks * ranks; ++i) channels_.push_back(std::make_unique<Channel>());
}

LoopbackWorld::~LoopbackWorld() = default;

Endpoint LoopbackWorld::endpoint(int rank) {
  if (rank < 0 || rank >= ranks_) throw std::out_of_range("rank outside world");
  return Endpoint(this, rank);
}

void LoopbackWorld::abort(const std::string& reason) {
  {
    std::lock_guard lock(abort_mutex_);
    if (aborted_.load()) return;
    abort_reason_ = reason;
    aborted_.store(true);
  }
  for (auto& c : channels_) {
    std::lock_guard lock(c->mutex);
    c->ready.notify_all();
  }
}

bool LoopbackWorld::aborted() const { return aborted_.load(); }

std::size_t LoopbackWorld::pending() const {
  std::size_t n = 0;
  for (const auto& c : channels_) {
    std::lock_guard lock(c->mutex);
    n += c->queue.size();
  }
  return n;
}

void LoopbackWorld::push(int from, int to, std::vector<std::uint8_t> bytes) {
  if (aborted()) {
    std::lock_guard lock(abort_mutex_);
    throw PeerShutdown("send after shutdown: " + abort_reason_);
  }
  Channel& c = *channels_[std::size_t(from * ranks_ + to)];
  {
    std::lock_guard lock(c.mutex);
    c.queue.push_back(std::move(bytes));
  }
  c.ready.notify_one();
}

std::vector<std::uint8_t> LoopbackWorld::pop(int from, int to) {
  Channel& c = *channels_[std::size_t(from * ranks_ + to)];
  std::unique_lock lock(c.mutex);
  c.ready.wait(lock, [&] { return !c.queue.empty() || aborted(); });
  if (c.queue.empty()) {
    lock.unlock();
    std::lock_guard alock(abort_mutex_);
    throw PeerShutdown("receive interrupted: " + abort_reason_);
  }
  auto bytes = std::move(c.queue.front());
  c.queue.pop_front();
  return bytes;
}

int Endpoint::size() const { return world_->size(); }

void Endpoint::declare_neighbors(std::vector<int> peers) {
  for (int p : peers)
    if (p < 0 || p >= size() || p == rank_) throw std::invalid_argument("invalid neighbour rank");
  std::sort(peers.begin(), peers.end());
  peers.erase(std::unique(peers.begin(), peers.end()), peers.end());
  neighbors_ = std::move(peers);
}

bool Endpoint::is_neighbor(int peer) const {
  if (peer < 0 || peer >= size()) return false;
  if (!neighbors_) return true;
  return std::binary_search(neighbors_->begin(), neighbors_->end(), peer);
}

void Endpoint::check_peer(int peer) const {
  if (!is_neighbor(peer))
    throw std::invalid_argument("rank " + std::to_string(peer) + " is not a declared neighbour of rank " +
                                std::to_string(rank_));
}

void Endpoint::send(int peer, const Message& m) {
  check_peer(peer);
  auto bytes = encode(m);
  const auto n = bytes.size();
  world_->push(rank_, peer, std::move(bytes));
  ++stats_.messages_sent;
  stats_.bytes_sent += n;
}

std::vector<double> Endpoint::recv(int peer, const Expected& expect) {
  check_peer(peer);
  const auto bytes = world_->pop(peer, rank_);
  Message m = decode(bytes);
  ++stats_.messages_received;
  stats_.bytes_received += bytes.size();
  const MessageHeader& h = m.header;
  if (h.sweep != expect.sweep || h.phase != expect.phase || h.side != expect.side ||
      h.depth != expect.depth || (expect.payload_len && h.payload_len != *expect.payload_len)) {
    std::ostringstream os;
    os << "rank " << rank_ << " from " << peer << ": got (sweep " << h.sweep << ", phase " << int(h.phase)
       << ", side " << int(h.side) << ", depth " << h.depth << ", " << h.payload_len
       << " bytes), expected (sweep " << expect.sweep << ", phase " << expect.phase << ", side "
       << expect.side << ", depth " << expect.depth;
    if (expect.payload_len) os << ", " << *expect.payload_len << " bytes";
    os << ")";
    throw ProtocolError(os.str());
  }
  return std::move(m.payload);
}

namespace detail {

std::string describe(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown exception";
  }
}

}  // namespace detail

}  // namespace ptb
