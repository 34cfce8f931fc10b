#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "moba/common/kv_config.h"
#include "moba/env/types.h"
#include "moba/features/observation.h"
#include "moba/net/params.h"
#include "moba/net/tape.h"

namespace moba::net {

enum Head : int { kButtonHead = 0, kMoveXHead, kMoveYHead, kOffsetXHead, kOffsetYHead, kTargetHead };
inline constexpr int kNumHeads = 6;
const char* head_name(int head);

struct NetConfig {
  int image_size = 16;
  int image_channels = features::Observation::kImageChannels;
  int conv1 = 8;
  int conv2 = 16;
  int image_hidden = 64;
  int unit_width = 32;
  int unit_hidden = 64;
  int key_width = 32;
  int global_width = 13;
  int global_hidden = 32;
  int trunk = 256;
  int lstm = 128;

  int num_buttons = env::kNumButtons;
  int move_bins = 8;
  int offset_bins = 8;
  // Slot count of the fixed-width target head used when attention is off.
  int max_units = 48;

  bool use_lstm = true;
  bool use_attention = true;
  bool use_mask = true;

  // Reduced widths used for the single-core training runs.
  static NetConfig small();
  // Reads [net]; unset keys keep the values of `base`.
  static NetConfig from_kv(const KvConfig& kv, NetConfig base);
  void validate() const;
  // Fixed head width; for the target head with attention this is -1 (one
  // logit per observed unit).
  int head_width(int head) const;
};

struct HiddenState {
  std::vector<double> h;
  std::vector<double> c;

  static HiddenState zeros(const NetConfig& cfg);
};

struct PolicyOutput {
  std::array<std::vector<double>, kNumHeads> logits;
  double value = 0.0;
};

// Per-head label masks as the network sees them. With use_mask off every
// existing label is allowed; target slots past the observed units are never
// allowed.
using HeadMasks = std::array<std::vector<uint8_t>, kNumHeads>;
HeadMasks head_masks(const NetConfig& cfg, const env::ActionMask& mask, size_t num_units);

class Network {
 public:
  explicit Network(NetConfig cfg);

  const NetConfig& config() const { return cfg_; }
  const ParamLayout& layout() const { return layout_; }

  Params init(uint64_t seed) const;

  struct StepVars {
    std::array<Tape::Var, kNumHeads> logits{};
    Tape::Var value = -1;
    Tape::Var h = -1;
    Tape::Var c = -1;
  };
  // Records one time step on `tape`; `h`/`c` are the incoming LSTM state.
  StepVars step(Tape& tape, const features::Observation& obs, Tape::Var h, Tape::Var c) const;

  // Unrolls a sequence from `entry` on one tape.
  std::vector<StepVars> unroll(Tape& tape, std::span<const features::Observation* const> obs,
                               const HiddenState& entry) const;

  // Inference for one step (no gradient).
  PolicyOutput forward(const Params& params, const features::Observation& obs, HiddenState& hidden) const;

  // Throws ContractError naming the first layer holding a non-finite value.
  void check_finite(const Params& params) const;

 private:
  void check_obs(const features::Observation& obs) const;

  NetConfig cfg_;
  ParamLayout layout_;
  struct Offsets {
    size_t conv1_w, conv1_b, conv2_w, conv2_b, img_w, img_b;
    std::array<size_t, 4> unit1_w, unit1_b, unit2_w, unit2_b;
    size_t glob_w, glob_b, trunk_w, trunk_b;
    size_t lstm_wx, lstm_b, lstm_wh;
    std::array<size_t, kNumHeads> head_w, head_b;
    size_t value_w, value_b, query_w;
  } off_{};
  int conv1_out_ = 0, conv2_out_ = 0;
};

}  // namespace moba::net
