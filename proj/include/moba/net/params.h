#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace moba::net {

struct ParamEntry {
  std::string name;
  size_t offset = 0;
  std::vector<int> shape;
  size_t size = 0;
};

class ParamLayout {
 public:
  size_t add(const std::string& name, std::vector<int> shape);
  const ParamEntry& find(const std::string& name) const;
  // Entry owning flat index `i`.
  const ParamEntry& owner(size_t i) const;
  const std::vector<ParamEntry>& entries() const { return entries_; }
  size_t total() const { return total_; }
  // FNV-1a over names and shapes in layout order.
  uint64_t digest() const;

 private:
  std::vector<ParamEntry> entries_;
  size_t total_ = 0;
};

// Flat parameter vector. Values are held in double; the serialized form is
// binary32, so a blob round-trips bit-exactly once values have passed through
// float once (see round_to_float).
struct Params {
  std::vector<double> values;
  uint64_t version = 0;

  void round_to_float();
};

inline constexpr char kParamsMagic[4] = {'M', 'B', 'P', '1'};
inline constexpr uint32_t kParamsFormat = 1;

// magic | u32 format | u64 version | u64 layout digest | u64 count | f32[count]
// (all little-endian).
std::vector<uint8_t> serialize_params(const Params& p, const ParamLayout& layout);
// Throws FormatError on bad magic/format/digest/size.
Params deserialize_params(std::span<const uint8_t> blob, const ParamLayout& layout);
// Reads just the header fields without checking the layout.
struct ParamsHeader {
  uint32_t format = 0;
  uint64_t version = 0;
  uint64_t layout_digest = 0;
  uint64_t count = 0;
};
ParamsHeader read_params_header(std::span<const uint8_t> blob);

void save_params_file(const std::string& path, const Params& p, const ParamLayout& layout);
Params load_params_file(const std::string& path, const ParamLayout& layout);

}  // namespace moba::net
