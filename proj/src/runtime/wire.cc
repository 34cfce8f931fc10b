#include "moba/runtime/wire.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include "moba/common/error.h"
#include "moba/common/fnv.h"

namespace moba::runtime {

const char* to_string(Command c) {
  switch (c) {
    case Command::kPush: return "PUSH";
    case Command::kSample: return "SAMPLE";
    case Command::kAck: return "ACK";
    case Command::kModel: return "MODEL";
    case Command::kRegister: return "REGISTER";
  }
  return "?";
}

namespace {

void put_be(std::vector<uint8_t>& out, uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint64_t get_be(const uint8_t* p, int bytes) {
  uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v = (v << 8) | p[i];
  return v;
}

bool valid_command(uint8_t c) { return c >= 1 && c <= 5; }

}  // namespace

std::vector<uint8_t> encode_message(Command c, std::span<const uint8_t> payload) {
  if (payload.size() > kMaxWirePayload) throw ContractError("wire payload too large");
  std::vector<uint8_t> out;
  out.reserve(kWireHeaderBytes + payload.size() + 8);
  out.insert(out.end(), kWireMagic, kWireMagic + 4);
  out.push_back(static_cast<uint8_t>(c));
  put_be(out, payload.size(), 4);
  out.insert(out.end(), payload.begin(), payload.end());
  put_be(out, fnv1a64(out), 8);
  return out;
}

Message decode_message(std::span<const uint8_t> b) {
  if (b.size() < kWireHeaderBytes + 8 || std::memcmp(b.data(), kWireMagic, 4) != 0)
    throw FormatError("bad wire magic");
  if (!valid_command(b[4])) throw FormatError("unknown wire command " + std::to_string(b[4]));
  uint64_t len = get_be(b.data() + 5, 4);
  if (b.size() != kWireHeaderBytes + len + 8) throw FormatError("wire length mismatch");
  if (fnv1a64(b.first(kWireHeaderBytes + len)) != get_be(b.data() + kWireHeaderBytes + len, 8))
    throw FormatError("wire checksum mismatch");
  Message m;
  m.command = static_cast<Command>(b[4]);
  m.payload.assign(b.begin() + kWireHeaderBytes, b.begin() + kWireHeaderBytes + len);
  return m;
}

Endpoint Endpoint::parse(const std::string& text) {
  Endpoint ep;
  if (text.starts_with("unix:")) {
    ep.kind = kUnix;
    ep.path = text.substr(5);
    if (ep.path.empty() || ep.path.size() >= sizeof(sockaddr_un::sun_path))
      throw ConfigError("endpoint", "bad unix socket path '" + ep.path + "'");
    return ep;
  }
  if (text.starts_with("tcp:")) {
    ep.kind = kTcp;
    auto rest = text.substr(4);
    auto colon = rest.rfind(':');
    if (colon == std::string::npos) throw ConfigError("endpoint", "expected tcp:host:port");
    ep.host = rest.substr(0, colon);
    try {
      ep.port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("endpoint", "bad port in '" + text + "'");
    }
    return ep;
  }
  throw ConfigError("endpoint", "expected unix:PATH or tcp:HOST:PORT, got '" + text + "'");
}

std::string Endpoint::str() const {
  return kind == kUnix ? "unix:" + path : "tcp:" + host + ":" + std::to_string(port);
}

namespace {

int open_socket(const Endpoint& ep, sockaddr_storage& addr, socklen_t& len) {
  std::memset(&addr, 0, sizeof addr);
  if (ep.kind == Endpoint::kUnix) {
    auto* un = reinterpret_cast<sockaddr_un*>(&addr);
    un->sun_family = AF_UNIX;
    std::strncpy(un->sun_path, ep.path.c_str(), sizeof(un->sun_path) - 1);
    len = sizeof(sockaddr_un);
    return ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
  }
  auto* in = reinterpret_cast<sockaddr_in*>(&addr);
  in->sin_family = AF_INET;
  in->sin_port = htons(static_cast<uint16_t>(ep.port));
  std::string host = ep.host == "localhost" ? "127.0.0.1" : ep.host;
  if (inet_pton(AF_INET, host.c_str(), &in->sin_addr) != 1) throw IoError("bad IPv4 address " + ep.host);
  len = sizeof(sockaddr_in);
  int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd >= 0) {
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  return fd;
}

}  // namespace

int listen_endpoint(const Endpoint& ep) {
  sockaddr_storage addr;
  socklen_t len;
  int fd = open_socket(ep, addr, len);
  if (fd < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  if (ep.kind == Endpoint::kUnix) ::unlink(ep.path.c_str());
  int one = 1;
  setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), len) != 0 || ::listen(fd, 64) != 0) {
    int e = errno;
    ::close(fd);
    throw IoError("cannot listen on " + ep.str() + ": " + std::strerror(e));
  }
  return fd;
}

int connect_endpoint(const Endpoint& ep, int timeout_ms) {
  auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  int backoff = 10;
  for (;;) {
    sockaddr_storage addr;
    socklen_t len;
    int fd = open_socket(ep, addr, len);
    if (fd < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), len) == 0) return fd;
    int e = errno;
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline)
      throw IoError("cannot connect to " + ep.str() + ": " + std::strerror(e));
    std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
    backoff = std::min(backoff * 2, 500);
  }
}

namespace {

void write_all(int fd, const uint8_t* p, size_t n) {
  while (n > 0) {
    ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("send: ") + std::strerror(errno));
    }
    p += w;
    n -= static_cast<size_t>(w);
  }
}

// Returns bytes read before EOF.
size_t read_all(int fd, uint8_t* p, size_t n) {
  size_t got = 0;
  while (got < n) {
    ssize_t r = ::recv(fd, p + got, n - got, 0);
    if (r == 0) return got;
    if (r < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("recv: ") + std::strerror(errno));
    }
    got += static_cast<size_t>(r);
  }
  return got;
}

}  // namespace

void write_message(int fd, Command c, std::span<const uint8_t> payload) {
  auto bytes = encode_message(c, payload);
  write_all(fd, bytes.data(), bytes.size());
}

std::optional<Message> read_message(int fd) {
  std::vector<uint8_t> buf(kWireHeaderBytes);
  size_t got = read_all(fd, buf.data(), buf.size());
  if (got == 0) return std::nullopt;
  if (got < buf.size()) throw IoError("stream closed inside a message header");
  if (std::memcmp(buf.data(), kWireMagic, 4) != 0) throw FormatError("bad wire magic");
  uint64_t len = get_be(buf.data() + 5, 4);
  if (len > kMaxWirePayload) throw FormatError("wire payload length exceeds limit");
  buf.resize(kWireHeaderBytes + len + 8);
  if (read_all(fd, buf.data() + kWireHeaderBytes, len + 8) != len + 8)
    throw IoError("stream closed inside a message body");
  return decode_message(buf);
}

Message request(int fd, Command c, std::span<const uint8_t> payload) {
  write_message(fd, c, payload);
  auto reply = read_message(fd);
  if (!reply) throw IoError("peer closed the connection");
  return *reply;
}

}  // namespace moba::runtime
