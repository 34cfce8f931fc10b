#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace moba::runtime {

// Message on a stream socket:
//   "MPF1" | u8 command | u32 big-endian payload length | payload |
//   u64 big-endian FNV-1a-64 of everything before it.
inline constexpr char kWireMagic[4] = {'M', 'P', 'F', '1'};
inline constexpr size_t kWireHeaderBytes = 9;
inline constexpr uint32_t kMaxWirePayload = 256u << 20;

enum class Command : uint8_t { kPush = 1, kSample = 2, kAck = 3, kModel = 4, kRegister = 5 };
const char* to_string(Command c);

struct Message {
  Command command = Command::kAck;
  std::vector<uint8_t> payload;
};

std::vector<uint8_t> encode_message(Command c, std::span<const uint8_t> payload);
// Throws FormatError on bad magic, unknown command, length or checksum.
Message decode_message(std::span<const uint8_t> bytes);

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// "unix:/path/to/socket" or "tcp:host:port".
struct Endpoint {
  enum Kind { kUnix, kTcp } kind = kUnix;
  std::string path;
  std::string host;
  int port = 0;

  static Endpoint parse(const std::string& text);
  std::string str() const;
};

int listen_endpoint(const Endpoint& ep);
// Retries with exponential backoff up to `timeout_ms`; throws IoError.
int connect_endpoint(const Endpoint& ep, int timeout_ms = 10000);

void write_message(int fd, Command c, std::span<const uint8_t> payload);
// nullopt on orderly EOF before a header; IoError on a broken stream.
std::optional<Message> read_message(int fd);
// Sends and waits for one reply.
Message request(int fd, Command c, std::span<const uint8_t> payload);

// Little-endian payload helpers shared by the services.
class PayloadWriter {
 public:
  template <typename T>
  PayloadWriter& put(T v) {
    // Floating-point values always travel as binary64.
    uint64_t u;
    size_t n = sizeof(T);
    if constexpr (std::is_floating_point_v<T>) {
      u = std::bit_cast<uint64_t>(static_cast<double>(v));
      n = 8;
    } else {
      u = static_cast<uint64_t>(v);
    }
    for (size_t i = 0; i < n; ++i) bytes.push_back(static_cast<uint8_t>(u >> (8 * i)));
    return *this;
  }
  PayloadWriter& append(std::span<const uint8_t> b) {
    bytes.insert(bytes.end(), b.begin(), b.end());
    return *this;
  }
  std::vector<uint8_t> bytes;
};

class PayloadReader {
 public:
  explicit PayloadReader(std::span<const uint8_t> b) : b_(b) {}
  template <typename T>
  T get() {
    size_t n = std::is_floating_point_v<T> ? 8 : sizeof(T);
    if (pos_ + n > b_.size()) throw IoError("short payload");
    uint64_t u = 0;
    for (size_t i = 0; i < n; ++i) u |= static_cast<uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += n;
    if constexpr (std::is_floating_point_v<T>) return static_cast<T>(std::bit_cast<double>(u));
    else return static_cast<T>(u);
  }
  std::span<const uint8_t> rest() const { return b_.subspan(pos_); }

 private:
  std::span<const uint8_t> b_;
  size_t pos_ = 0;
};

}  // namespace moba::runtime
