#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace ptb {

inline constexpr std::uint32_t kWireMagic = 0x53464847;
inline constexpr std::size_t kHeaderBytes = 20;

/// Wire header, little-endian:
///   u32 magic | u32 sweep | u8 phase (0=x,1=y,2=z) | u8 side (0=low,1=high)
///   | u16 depth | u64 payload_len (bytes)
struct MessageHeader {
  std::uint32_t magic = kWireMagic;
  std::uint32_t sweep = 0;
  std::uint8_t phase = 0;
  std::uint8_t side = 0;
  std::uint16_t depth = 0;
  std::uint64_t payload_len = 0;
  friend bool operator==(const MessageHeader&, const MessageHeader&) = default;
};

struct Message {
  MessageHeader header;
  std::vector<double> payload;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PeerShutdown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds a message; payload_len is filled from the payload.
Message make_message(std::uint32_t sweep, int phase, int side, int depth, std::vector<double> payload);

std::vector<std::uint8_t> encode(const Message& m);
/// Throws ProtocolError on a bad magic, truncated buffer or length mismatch.
Message decode(std::span<const std::uint8_t> bytes);

/// Header fields a receiver expects; payload_len is checked only if set.
struct Expected {
  std::uint32_t sweep = 0;
  int phase = 0;
  int side = 0;
  int depth = 0;
  std::optional<std::uint64_t> payload_len;
};

struct EndpointStats {
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_received = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
};

class LoopbackWorld;

/// One rank's handle into a world. Confined to one thread at a time but may be
/// moved between threads.
class Endpoint {
 public:
  int rank() const { return rank_; }
  int size() const;

  /// Restricts send/recv to these peers. Without a declaration every rank is a peer.
  void declare_neighbors(std::vector<int> peers);
  bool is_neighbor(int peer) const;

  void send(int peer, const Message& m);
  /// Blocks until the next message from `peer` arrives, validates its header
  /// and returns the payload. Throws ProtocolError on a mismatch and
  /// PeerShutdown if the world was aborted.
  std::vector<double> recv(int peer, const Expected& expect);

  const EndpointStats& stats() const { return stats_; }

 private:
  friend class LoopbackWorld;
  Endpoint(LoopbackWorld* world, int rank) : world_(world), rank_(rank) {}
  void check_peer(int peer) const;

  LoopbackWorld* world_;
  int rank_;
  std::optional<std::vector<int>> neighbors_;
  EndpointStats stats_;
};

/// In-process transport: one FIFO of encoded messages per (sender, receiver).
/// Sends never block.
class LoopbackWorld {
 public:
  explicit LoopbackWorld(int ranks);
  ~LoopbackWorld();
  LoopbackWorld(const LoopbackWorld&) = delete;
  LoopbackWorld& operator=(const LoopbackWorld&) = delete;

  int size() const { return ranks_; }
  Endpoint endpoint(int rank);

  /// Wakes every blocked receiver with PeerShutdown; later sends and receives fail too.
  void abort(const std::string& reason);
  bool aborted() const;

  /// Messages queued and not yet received.
  std::size_t pending() const;

 private:
  friend class Endpoint;
  struct Channel;
  void push(int from, int to, std::vector<std::uint8_t> bytes);
  std::vector<std::uint8_t> pop(int from, int to);

  int ranks_;
  std::vector<std::unique_ptr<Channel>> channels_;  // index from * ranks + to
  mutable std::mutex abort_mutex_;
  std::string abort_reason_;
  std::atomic<bool> aborted_{false};
};

/// A rank program failed; `cause` holds the original exception.
class WorldError : public std::runtime_error {
 public:
  WorldError(int rank, const std::string& what, std::exception_ptr cause)
      : std::runtime_error("rank " + std::to_string(rank) + ": " + what), rank_(rank), cause_(cause) {}
  int rank() const { return rank_; }
  std::exception_ptr cause() const { return cause_; }

 private:
  int rank_;
  std::exception_ptr cause_;
};

namespace detail {
std::string describe(std::exception_ptr e);
}

/// Runs program(Endpoint&) for every rank on its own thread and returns the
/// results in rank order. The first rank that throws aborts the world; the
/// others then see PeerShutdown, and the failure is rethrown as WorldError.
template <class Program>
auto spawn_world(int ranks, Program program) -> std::vector<std::invoke_result_t<Program&, Endpoint&>> {
  using Result = std::invoke_result_t<Program&, Endpoint&>;
  static_assert(!std::is_void_v<Result>, "rank programs must return a value");
  if (ranks < 1) throw std::invalid_argument("spawn_world needs at least one rank");

  LoopbackWorld world(ranks);
  std::vector<std::optional<Result>> results(static_cast<std::size_t>(ranks));
  std::mutex failure_mutex;
  int failed_rank = -1;
  std::exception_ptr failure;

  auto body = [&](int r) {
    Endpoint ep = world.endpoint(r);
    try {
      results[std::size_t(r)].emplace(program(ep));
    } catch (const PeerShutdown&) {
      std::lock_guard lock(failure_mutex);
      if (!failure && !world.aborted()) {
        failed_rank = r;
        failure = std::current_exception();
      }
    } catch (...) {
      {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failed_rank = r;
          failure = std::current_exception();
        }
      }
      world.abort("rank " + std::to_string(r) + " failed");
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(std::size_t(ranks));
  for (int r = 0; r < ranks; ++r) threads.emplace_back(body, r);
  for (auto& t : threads) t.join();

  if (failure) throw WorldError(failed_rank, detail::describe(failure), failure);
  std::vector<Result> out;
  out.reserve(std::size_t(ranks));
  for (int r = 0; r < ranks; ++r) {
    if (!results[std::size_t(r)])
      throw WorldError(r, "rank finished without a result", nullptr);
    out.push_back(std::move(*results[std::size_t(r)]));
  }
  return out;
}

}  // namespace ptb
