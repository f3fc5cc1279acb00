#pragma once

// Broadcast message bus. Every publisher's datagram reaches every current
// subscriber; publishers never know who is listening, so clients can join
// or leave without touching any sender's configuration.
//
// Two transports share the Sender/Receiver interface:
//  - UDP: one datagram to a broadcast (or unicast) address per publish.
//  - Sim: an in-process network with seeded latency, jitter and loss, for
//    deterministic tests.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stagewire/osc.hpp"

namespace stagewire::bus {

inline constexpr std::uint16_t kDefaultPort = 9000;
inline constexpr const char* kDefaultBroadcastHost = "255.255.255.255";
inline constexpr const char* kBroadcastEnv = "STAGEWIRE_BROADCAST";

struct Endpoint {
  enum class Transport { Udp, Sim };

  Transport transport = Transport::Udp;
  std::string host;        // Udp
  std::uint16_t port = 0;  // Udp, 1-65535
  std::string name;        // Sim

  static Endpoint udp(std::string host, std::uint16_t port);
  static Endpoint sim(std::string name);
  /// "HOST:PORT" or "sim:NAME". Throws Error{InvalidEndpoint}.
  static Endpoint parse(std::string_view text);

  std::string to_string() const;
  bool operator==(const Endpoint&) const = default;
};

/// $STAGEWIRE_BROADCAST if set, else 255.255.255.255:9000.
Endpoint default_broadcast();

struct PublisherConfig {
  std::string name;
  Endpoint target;

  /// Stable FNV-1a digest of every field.
  std::uint64_t hash() const;
  bool operator==(const PublisherConfig&) const = default;
};

struct Datagram {
  osc::Bytes payload;
  std::string sender;

  bool operator==(const Datagram&) const = default;
};

class Sender {
 public:
  virtual ~Sender() = default;
  /// Throws Error{Oversize} above 65507 bytes, Error{SocketFailure} (UDP).
  virtual void publish(std::span<const std::uint8_t> packet) = 0;
  virtual const PublisherConfig& config() const = 0;
};

class Receiver {
 public:
  virtual ~Receiver() = default;
  /// Next packet, or nullopt once `timeout` elapses. Throws Error{Closed}.
  virtual std::optional<Datagram> recv(std::chrono::milliseconds timeout) = 0;
};

// --- simulated network ----------------------------------------------------

struct SimNetConfig {
  double latency_ms = 0;
  double jitter_ms = 0;
  double loss_rate = 0;
  std::uint64_t seed = 0;

  /// Throws Error{InvalidConfig}.
  void validate() const;
};

class SimNetwork;

namespace detail {
struct SimState;
}

class SimPublisher final : public Sender {
 public:
  void publish(std::span<const std::uint8_t> packet) override;
  const PublisherConfig& config() const override { return config_; }

 private:
  friend class SimNetwork;
  SimPublisher(std::shared_ptr<detail::SimState> state, PublisherConfig config);

  std::shared_ptr<detail::SimState> state_;
  PublisherConfig config_;
};

/// Receiver handle; unsubscribes on destruction. Single consumer.
class SimSubscription final : public Receiver {
 public:
  ~SimSubscription() override;
  SimSubscription(const SimSubscription&) = delete;
  SimSubscription& operator=(const SimSubscription&) = delete;

  std::optional<Datagram> recv(std::chrono::milliseconds timeout) override;
  /// Every packet deliverable at the current virtual time, without waiting.
  std::vector<Datagram> drain();
  const std::string& name() const { return name_; }

 private:
  friend class SimNetwork;
  SimSubscription(std::shared_ptr<detail::SimState> state, std::string name);

  std::shared_ptr<detail::SimState> state_;
  std::string name_;
};

/// In-process broadcast network. Delivery times are virtual: a packet sent
/// at time t becomes receivable once the clock reaches t + latency + jitter.
/// Loss and jitter are pure functions of (seed, publisher, subscriber,
/// packet sequence), so adding a subscriber never changes what the others
/// see. Order is preserved per (publisher, subscriber) link. Thread-safe.
class SimNetwork {
 public:
  explicit SimNetwork(SimNetConfig config = {});

  /// Throws Error{DuplicateName}.
  std::unique_ptr<SimPublisher> publisher(const std::string& name);
  /// Throws Error{DuplicateName}. Packets published earlier are not replayed.
  std::unique_ptr<SimSubscription> subscribe(const std::string& name);

  double now() const;
  /// Moves the virtual clock forward (never backward).
  void advance_to(double t_ms);
  void advance(double dt_ms);

  /// Wakes all receivers; further recv calls throw Error{Closed}.
  void shutdown();

  const SimNetConfig& config() const;

 private:
  std::shared_ptr<detail::SimState> state_;
};

// --- UDP ------------------------------------------------------------------

/// Sends every packet as one datagram to `target`. Broadcast is enabled on
/// the socket so broadcast addresses work.
class UdpSender final : public Sender {
 public:
  explicit UdpSender(Endpoint target, std::string name = "udp");
  ~UdpSender() override;
  UdpSender(const UdpSender&) = delete;
  UdpSender& operator=(const UdpSender&) = delete;

  void publish(std::span<const std::uint8_t> packet) override;
  const PublisherConfig& config() const override { return config_; }

 private:
  PublisherConfig config_;
  int fd_ = -1;
  std::vector<std::uint8_t> addr_;  // sockaddr_in
};

class UdpReceiver final : public Receiver {
 public:
  /// Binds 0.0.0.0:port (0 picks a free port). With `shared`, several
  /// processes on one host may listen on the same port. Throws
  /// Error{BindFailure}.
  explicit UdpReceiver(std::uint16_t port, bool shared = false);
  ~UdpReceiver() override;
  UdpReceiver(const UdpReceiver&) = delete;
  UdpReceiver& operator=(const UdpReceiver&) = delete;

  std::optional<Datagram> recv(std::chrono::milliseconds timeout) override;
  std::uint16_t port() const { return port_; }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace stagewire::bus
