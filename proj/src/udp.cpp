#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "stagewire/bus.hpp"
#include "stagewire/error.hpp"

namespace stagewire::bus {
namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

sockaddr_in resolve(const Endpoint& target) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(target.port);
  if (inet_pton(AF_INET, target.host.c_str(), &addr.sin_addr) == 1) return addr;

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* found = nullptr;
  if (getaddrinfo(target.host.c_str(), nullptr, &hints, &found) != 0 || found == nullptr)
    throw Error(Errc::InvalidEndpoint, "cannot resolve host \"" + target.host + "\"");
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(found->ai_addr)->sin_addr;
  freeaddrinfo(found);
  return addr;
}

}  // namespace

UdpSender::UdpSender(Endpoint target, std::string name) : config_{std::move(name), std::move(target)} {
  if (config_.target.transport != Endpoint::Transport::Udp) throw Error(Errc::InvalidEndpoint, "UdpSender needs a HOST:PORT endpoint");
  const sockaddr_in addr = resolve(config_.target);
  addr_.resize(sizeof addr);
  std::memcpy(addr_.data(), &addr, sizeof addr);

  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw Error(Errc::SocketFailure, errno_text("socket"));
  const int on = 1;
  if (::setsockopt(fd_, SOL_SOCKET, SO_BROADCAST, &on, sizeof on) != 0) {
    ::close(fd_);
    throw Error(Errc::SocketFailure, errno_text("SO_BROADCAST"));
  }
}

UdpSender::~UdpSender() {
  if (fd_ >= 0) ::close(fd_);
}

void UdpSender::publish(std::span<const std::uint8_t> packet) {
  if (packet.size() > osc::kMaxPacketSize)
    throw Error(Errc::Oversize, std::to_string(packet.size()) + " bytes exceeds " + std::to_string(osc::kMaxPacketSize));
  const auto sent = ::sendto(fd_, packet.data(), packet.size(), 0, reinterpret_cast<const sockaddr*>(addr_.data()),
                             static_cast<socklen_t>(addr_.size()));
  if (sent < 0 || static_cast<std::size_t>(sent) != packet.size())
    throw Error(Errc::SocketFailure, errno_text(("sendto " + config_.target.to_string()).c_str()));
}

UdpReceiver::UdpReceiver(std::uint16_t port, bool shared) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw Error(Errc::SocketFailure, errno_text("socket"));
  if (shared) {
    const int on = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &on, sizeof on);
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEPORT, &on, sizeof on);
  }
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    const auto msg = errno_text(("bind port " + std::to_string(port)).c_str());
    ::close(fd_);
    fd_ = -1;
    throw Error(Errc::BindFailure, msg);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

UdpReceiver::~UdpReceiver() {
  if (fd_ >= 0) ::close(fd_);
}

std::optional<Datagram> UdpReceiver::recv(std::chrono::milliseconds timeout) {
  if (fd_ < 0) throw Error(Errc::Closed, "receiver closed");
  pollfd p{fd_, POLLIN, 0};
  const int ready = ::poll(&p, 1, static_cast<int>(std::max<std::int64_t>(0, timeout.count())));
  if (ready < 0) {
    if (errno == EINTR) return std::nullopt;
    throw Error(Errc::SocketFailure, errno_text("poll"));
  }
  if (ready == 0) return std::nullopt;

  Datagram d;
  d.payload.resize(65536);
  sockaddr_in from{};
  socklen_t len = sizeof from;
  const auto n = ::recvfrom(fd_, d.payload.data(), d.payload.size(), 0, reinterpret_cast<sockaddr*>(&from), &len);
  if (n < 0) throw Error(Errc::SocketFailure, errno_text("recvfrom"));
  d.payload.resize(static_cast<std::size_t>(n));
  char host[INET_ADDRSTRLEN] = {};
  inet_ntop(AF_INET, &from.sin_addr, host, sizeof host);
  d.sender = std::string(host) + ":" + std::to_string(ntohs(from.sin_port));
  return d;
}

}  // namespace stagewire::bus
