#include "moba/net/params.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "moba/common/error.h"
#include "moba/common/fnv.h"

namespace moba::net {

namespace {

template <typename T>
void put_le(std::vector<uint8_t>& out, T v) {
  for (size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

template <typename T>
T get_le(std::span<const uint8_t> in, size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw FormatError("params blob truncated");
  T v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(in[pos + i]) << (8 * i);
  pos += sizeof(T);
  return v;
}

constexpr size_t kHeaderBytes = 4 + 4 + 8 + 8 + 8;

}  // namespace

size_t ParamLayout::add(const std::string& name, std::vector<int> shape) {
  for (const auto& e : entries_)
    if (e.name == name) throw ContractError("duplicate parameter name " + name);
  ParamEntry e;
  e.name = name;
  e.offset = total_;
  e.size = 1;
  for (int d : shape) e.size *= static_cast<size_t>(d);
  e.shape = std::move(shape);
  total_ += e.size;
  entries_.push_back(e);
  return e.offset;
}

const ParamEntry& ParamLayout::find(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e;
  throw ContractError("no parameter named " + name);
}

const ParamEntry& ParamLayout::owner(size_t i) const {
  auto it = std::upper_bound(entries_.begin(), entries_.end(), i,
                             [](size_t v, const ParamEntry& e) { return v < e.offset; });
  if (it == entries_.begin() || i >= total_) throw ContractError("parameter index out of range");
  return *std::prev(it);
}

uint64_t ParamLayout::digest() const {
  uint64_t h = fnv1a64(std::string_view("layout"));
  for (const auto& e : entries_) {
    h = fnv1a64(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(e.name.data()), e.name.size()), h);
    for (int d : e.shape) {
      uint8_t b[4];
      std::memcpy(b, &d, 4);
      h = fnv1a64(std::span<const uint8_t>(b, 4), h);
    }
    uint8_t sep = 0xff;
    h = fnv1a64(std::span<const uint8_t>(&sep, 1), h);
  }
  return h;
}

void Params::round_to_float() {
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

std::vector<uint8_t> serialize_params(const Params& p, const ParamLayout& layout) {
  if (p.values.size() != layout.total()) throw ContractError("params size does not match layout");
  std::vector<uint8_t> out;
  out.reserve(kHeaderBytes + 4 * p.values.size());
  out.insert(out.end(), kParamsMagic, kParamsMagic + 4);
  put_le<uint32_t>(out, kParamsFormat);
  put_le<uint64_t>(out, p.version);
  put_le<uint64_t>(out, layout.digest());
  put_le<uint64_t>(out, p.values.size());
  for (double v : p.values) put_le<uint32_t>(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
  return out;
}

ParamsHeader read_params_header(std::span<const uint8_t> blob) {
  if (blob.size() < kHeaderBytes || std::memcmp(blob.data(), kParamsMagic, 4) != 0)
    throw FormatError("not a parameter blob (bad magic)");
  size_t pos = 4;
  ParamsHeader h;
  h.format = get_le<uint32_t>(blob, pos);
  h.version = get_le<uint64_t>(blob, pos);
  h.layout_digest = get_le<uint64_t>(blob, pos);
  h.count = get_le<uint64_t>(blob, pos);
  if (h.format != kParamsFormat) throw FormatError("unsupported parameter format " + std::to_string(h.format));
  return h;
}

Params deserialize_params(std::span<const uint8_t> blob, const ParamLayout& layout) {
  ParamsHeader h = read_params_header(blob);
  if (h.layout_digest != layout.digest())
    throw FormatError("parameter layout digest mismatch (snapshot built for a different network)");
  if (h.count != layout.total() || blob.size() != kHeaderBytes + 4 * h.count)
    throw FormatError("parameter count mismatch");
  Params p;
  p.version = h.version;
  p.values.resize(h.count);
  size_t pos = kHeaderBytes;
  for (auto& v : p.values) v = std::bit_cast<float>(get_le<uint32_t>(blob, pos));
  return p;
}

void save_params_file(const std::string& path, const Params& p, const ParamLayout& layout) {
  auto blob = serialize_params(p, layout);
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + tmp);
    f.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw std::runtime_error("cannot rename " + tmp);
}

Params load_params_file(const std::string& path, const ParamLayout& layout) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open snapshot " + path);
  std::vector<uint8_t> blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_params(blob, layout);
}

}  // namespace moba::net
