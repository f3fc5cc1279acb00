#include "stagewire/bus.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>

#include "stagewire/error.hpp"

namespace stagewire::bus {
namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Uniform [0,1) determined only by its inputs.
double link_uniform(std::uint64_t seed, std::string_view pub, std::string_view sub, std::uint64_t seq, std::uint64_t salt) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ fnv1a(pub));
  h = splitmix(h ^ fnv1a(sub, 0x84222325cbf29ce4ull));
  h = splitmix(h ^ seq);
  h = splitmix(h ^ salt);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

void check_size(std::span<const std::uint8_t> packet) {
  if (packet.size() > osc::kMaxPacketSize)
    throw Error(Errc::Oversize, std::to_string(packet.size()) + " bytes exceeds " + std::to_string(osc::kMaxPacketSize));
}

}  // namespace

Endpoint Endpoint::udp(std::string host, std::uint16_t port) {
  if (port == 0) throw Error(Errc::InvalidEndpoint, "port must be 1-65535");
  if (host.empty()) throw Error(Errc::InvalidEndpoint, "empty host");
  Endpoint e;
  e.transport = Transport::Udp;
  e.host = std::move(host);
  e.port = port;
  return e;
}

Endpoint Endpoint::sim(std::string name) {
  if (name.empty()) throw Error(Errc::InvalidEndpoint, "empty sim endpoint name");
  Endpoint e;
  e.transport = Transport::Sim;
  e.name = std::move(name);
  return e;
}

Endpoint Endpoint::parse(std::string_view text) {
  if (text.starts_with("sim:")) return sim(std::string(text.substr(4)));
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos) throw Error(Errc::InvalidEndpoint, "expected HOST:PORT, got \"" + std::string(text) + "\"");
  const auto port_text = text.substr(colon + 1);
  unsigned port = 0;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port < 1 || port > 65535)
    throw Error(Errc::InvalidEndpoint, "bad port in \"" + std::string(text) + "\"");
  return udp(std::string(text.substr(0, colon)), static_cast<std::uint16_t>(port));
}

std::string Endpoint::to_string() const {
  if (transport == Transport::Sim) return "sim:" + name;
  return host + ":" + std::to_string(port);
}

Endpoint default_broadcast() {
  if (const char* env = std::getenv(kBroadcastEnv); env != nullptr && *env != '\0') return Endpoint::parse(env);
  return Endpoint::udp(kDefaultBroadcastHost, kDefaultPort);
}

std::uint64_t PublisherConfig::hash() const {
  std::uint64_t h = fnv1a(name);
  h = fnv1a(target.to_string(), h ^ static_cast<std::uint64_t>(target.transport));
  return h;
}

void SimNetConfig::validate() const {
  if (!(latency_ms >= 0) || !std::isfinite(latency_ms)) throw Error(Errc::InvalidConfig, "latency_ms must be >= 0");
  if (!(jitter_ms >= 0) || !std::isfinite(jitter_ms)) throw Error(Errc::InvalidConfig, "jitter_ms must be >= 0");
  if (!(loss_rate >= 0 && loss_rate <= 1)) throw Error(Errc::InvalidConfig, "loss_rate must be in [0,1]");
}

namespace detail {

struct Pending {
  double deliver_at;
  std::uint64_t order;
  Datagram datagram;

  bool operator<(const Pending& o) const { return deliver_at != o.deliver_at ? deliver_at < o.deliver_at : order < o.order; }
};

struct SimState {
  explicit SimState(SimNetConfig c) : config(c) {}

  const SimNetConfig config;
  mutable std::mutex mutex;
  std::condition_variable wake;
  double now = 0;
  bool closed = false;
  std::uint64_t order = 0;
  std::map<std::string, std::uint64_t> publishers;  // name -> packets sent
  std::map<std::string, std::multiset<Pending>> queues;
  std::map<std::pair<std::string, std::string>, double> link_clock;  // last delivery per link

  void publish(const std::string& pub, std::span<const std::uint8_t> packet) {
    {
      std::lock_guard lock(mutex);
      const std::uint64_t seq = publishers[pub]++;
      for (auto& [sub, queue] : queues) {
        if (link_uniform(config.seed, pub, sub, seq, 0) < config.loss_rate) continue;
        double at = now + config.latency_ms + config.jitter_ms * link_uniform(config.seed, pub, sub, seq, 1);
        auto& last = link_clock[{pub, sub}];
        at = std::max(at, last);
        last = at;
        queue.insert({at, order++, Datagram{osc::Bytes(packet.begin(), packet.end()), pub}});
      }
    }
    wake.notify_all();
  }

  std::optional<Datagram> pop_ready(const std::string& sub) {
    auto q = queues.find(sub);
    if (q == queues.end()) throw Error(Errc::Closed, "subscription " + sub + " is gone");
    if (q->second.empty() || q->second.begin()->deliver_at > now) return std::nullopt;
    auto node = q->second.extract(q->second.begin());
    return std::move(node.value().datagram);
  }
};

}  // namespace detail

SimPublisher::SimPublisher(std::shared_ptr<detail::SimState> state, PublisherConfig config)
    : state_(std::move(state)), config_(std::move(config)) {}

void SimPublisher::publish(std::span<const std::uint8_t> packet) {
  check_size(packet);
  state_->publish(config_.name, packet);
}

SimSubscription::SimSubscription(std::shared_ptr<detail::SimState> state, std::string name)
    : state_(std::move(state)), name_(std::move(name)) {}

SimSubscription::~SimSubscription() {
  std::lock_guard lock(state_->mutex);
  state_->queues.erase(name_);
  std::erase_if(state_->link_clock, [&](const auto& kv) { return kv.first.second == name_; });
}

std::optional<Datagram> SimSubscription::recv(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::unique_lock lock(state_->mutex);
  while (true) {
    if (state_->closed) throw Error(Errc::Closed, "network shut down");
    if (auto d = state_->pop_ready(name_)) return d;
    if (state_->wake.wait_until(lock, deadline) == std::cv_status::timeout) {
      if (state_->closed) throw Error(Errc::Closed, "network shut down");
      return state_->pop_ready(name_);
    }
  }
}

std::vector<Datagram> SimSubscription::drain() {
  std::lock_guard lock(state_->mutex);
  if (state_->closed) throw Error(Errc::Closed, "network shut down");
  std::vector<Datagram> out;
  while (auto d = state_->pop_ready(name_)) out.push_back(std::move(*d));
  return out;
}

SimNetwork::SimNetwork(SimNetConfig config) {
  config.validate();
  state_ = std::make_shared<detail::SimState>(config);
}

std::unique_ptr<SimPublisher> SimNetwork::publisher(const std::string& name) {
  std::lock_guard lock(state_->mutex);
  if (!state_->publishers.emplace(name, 0).second) throw Error(Errc::DuplicateName, "publisher \"" + name + "\" exists");
  return std::unique_ptr<SimPublisher>(new SimPublisher(state_, {name, Endpoint::sim("broadcast")}));
}

std::unique_ptr<SimSubscription> SimNetwork::subscribe(const std::string& name) {
  std::lock_guard lock(state_->mutex);
  if (state_->closed) throw Error(Errc::Closed, "network shut down");
  if (!state_->queues.try_emplace(name).second) throw Error(Errc::DuplicateName, "subscriber \"" + name + "\" exists");
  return std::unique_ptr<SimSubscription>(new SimSubscription(state_, name));
}

double SimNetwork::now() const {
  std::lock_guard lock(state_->mutex);
  return state_->now;
}

void SimNetwork::advance_to(double t_ms) {
  {
    std::lock_guard lock(state_->mutex);
    state_->now = std::max(state_->now, t_ms);
  }
  state_->wake.notify_all();
}

void SimNetwork::advance(double dt_ms) {
  {
    std::lock_guard lock(state_->mutex);
    if (dt_ms > 0) state_->now += dt_ms;
  }
  state_->wake.notify_all();
}

void SimNetwork::shutdown() {
  {
    std::lock_guard lock(state_->mutex);
    state_->closed = true;
  }
  state_->wake.notify_all();
}

const SimNetConfig& SimNetwork::config() const { return state_->config; }

}  // namespace stagewire::bus
