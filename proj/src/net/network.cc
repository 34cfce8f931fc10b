#include "moba/net/network.h"

#include <cmath>

#include "moba/common/error.h"
#include "moba/common/rng.h"

namespace moba::net {

using features::Observation;

const char* head_name(int head) {
  static const char* names[kNumHeads] = {"button", "move_x", "move_y", "offset_x", "offset_y", "target"};
  return names[head];
}

NetConfig NetConfig::small() {
  NetConfig c;
  c.conv1 = 4;
  c.conv2 = 8;
  c.image_hidden = 32;
  c.unit_hidden = 32;
  c.key_width = 16;
  c.global_hidden = 16;
  c.trunk = 64;
  c.lstm = 32;
  return c;
}

NetConfig NetConfig::from_kv(const KvConfig& kv, NetConfig c) {
  if (kv.get_string("net.preset", "") == "small") c = small();
  else if (kv.get_string("net.preset", "") == "wide") c.lstm = 1024;
  auto geti = [&](const char* k, int& v) { v = static_cast<int>(kv.get_int(std::string("net.") + k, v)); };
  geti("conv1", c.conv1);
  geti("conv2", c.conv2);
  geti("image_hidden", c.image_hidden);
  geti("unit_hidden", c.unit_hidden);
  geti("key_width", c.key_width);
  geti("global_hidden", c.global_hidden);
  geti("trunk", c.trunk);
  geti("lstm", c.lstm);
  geti("max_units", c.max_units);
  c.use_lstm = kv.get_bool("net.use_lstm", c.use_lstm);
  c.use_attention = kv.get_bool("net.use_attention", c.use_attention);
  c.use_mask = kv.get_bool("net.use_mask", c.use_mask);
  c.validate();
  return c;
}

void NetConfig::validate() const {
  auto pos = [](int v, const char* key) {
    if (v < 1) throw ConfigError(std::string("net.") + key, "must be >= 1");
  };
  pos(conv1, "conv1");
  pos(conv2, "conv2");
  pos(image_hidden, "image_hidden");
  pos(unit_hidden, "unit_hidden");
  pos(key_width, "key_width");
  pos(global_hidden, "global_hidden");
  pos(trunk, "trunk");
  pos(lstm, "lstm");
  pos(max_units, "max_units");
  if (image_size < 4) throw ConfigError("net.image_size", "must be >= 4");
}

int NetConfig::head_width(int head) const {
  switch (head) {
    case kButtonHead: return num_buttons;
    case kMoveXHead:
    case kMoveYHead: return move_bins;
    case kOffsetXHead:
    case kOffsetYHead: return offset_bins;
    default: return use_attention ? -1 : max_units;
  }
}

HiddenState HiddenState::zeros(const NetConfig& cfg) {
  return {std::vector<double>(cfg.lstm, 0.0), std::vector<double>(cfg.lstm, 0.0)};
}

HeadMasks head_masks(const NetConfig& cfg, const env::ActionMask& mask, size_t num_units) {
  HeadMasks m;
  const std::vector<uint8_t>* src[kNumHeads] = {&mask.button,   &mask.move_x,   &mask.move_y,
                                                &mask.offset_x, &mask.offset_y, &mask.target};
  for (int k = 0; k < kNumHeads; ++k) {
    int width = cfg.head_width(k);
    if (width < 0) width = static_cast<int>(num_units);
    m[k].assign(width, 0);
    for (int i = 0; i < width; ++i) {
      bool exists = k != kTargetHead || static_cast<size_t>(i) < num_units;
      bool allowed = !cfg.use_mask || (static_cast<size_t>(i) < src[k]->size() && (*src[k])[i]);
      m[k][i] = exists && allowed;
    }
  }
  return m;
}

Network::Network(NetConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const NetConfig& c = cfg_;
  conv1_out_ = Tape::conv_out(c.image_size, 3, 1, 1);
  conv2_out_ = Tape::conv_out(conv1_out_, 3, 2, 1);
  off_.conv1_w = layout_.add("image.conv1.w", {c.conv1, c.image_channels, 3, 3});
  off_.conv1_b = layout_.add("image.conv1.b", {c.conv1});
  off_.conv2_w = layout_.add("image.conv2.w", {c.conv2, c.conv1, 3, 3});
  off_.conv2_b = layout_.add("image.conv2.b", {c.conv2});
  off_.img_w = layout_.add("image.fc.w", {c.image_hidden, c.conv2 * conv2_out_ * conv2_out_});
  off_.img_b = layout_.add("image.fc.b", {c.image_hidden});
  static const char* type_names[4] = {"hero", "creep", "turret", "base"};
  for (int t = 0; t < 4; ++t) {
    std::string p = std::string("unit.") + type_names[t];
    off_.unit1_w[t] = layout_.add(p + ".fc1.w", {c.unit_hidden, c.unit_width});
    off_.unit1_b[t] = layout_.add(p + ".fc1.b", {c.unit_hidden});
    off_.unit2_w[t] = layout_.add(p + ".fc2.w", {c.unit_hidden + c.key_width, c.unit_hidden});
    off_.unit2_b[t] = layout_.add(p + ".fc2.b", {c.unit_hidden + c.key_width});
  }
  off_.glob_w = layout_.add("global.fc.w", {c.global_hidden, c.global_width});
  off_.glob_b = layout_.add("global.fc.b", {c.global_hidden});
  int concat = c.image_hidden + 4 * c.unit_hidden + c.global_hidden;
  off_.trunk_w = layout_.add("trunk.fc.w", {c.trunk, concat});
  off_.trunk_b = layout_.add("trunk.fc.b", {c.trunk});
  int gates = c.use_lstm ? 4 * c.lstm : c.lstm;
  off_.lstm_wx = layout_.add(c.use_lstm ? "lstm.wx" : "core.fc.w", {gates, c.trunk});
  off_.lstm_b = layout_.add(c.use_lstm ? "lstm.b" : "core.fc.b", {gates});
  off_.lstm_wh = c.use_lstm ? layout_.add("lstm.wh", {gates, c.lstm}) : Tape::npos;
  for (int k = 0; k < kNumHeads; ++k) {
    if (k == kTargetHead && c.use_attention) {
      off_.head_w[k] = off_.head_b[k] = Tape::npos;
      continue;
    }
    int w = c.head_width(k);
    off_.head_w[k] = layout_.add(std::string("head.") + head_name(k) + ".w", {w, c.lstm});
    off_.head_b[k] = layout_.add(std::string("head.") + head_name(k) + ".b", {w});
  }
  off_.value_w = layout_.add("head.value.w", {1, c.lstm});
  off_.value_b = layout_.add("head.value.b", {1});
  off_.query_w = c.use_attention ? layout_.add("head.query.w", {c.key_width, c.lstm}) : Tape::npos;
}

namespace {

double normal(SplitMix64& rng) {
  double u1 = rng.uniform(), u2 = rng.uniform();
  if (u1 <= 0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Orthogonal rows via Gram-Schmidt on a Gaussian matrix.
void orthogonal_block(SplitMix64& rng, double* w, int n, int stride) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i) {
    for (;;) {
      for (double& v : rows[i]) v = normal(rng);
      for (int j = 0; j < i; ++j) {
        double d = 0;
        for (int k = 0; k < n; ++k) d += rows[i][k] * rows[j][k];
        for (int k = 0; k < n; ++k) rows[i][k] -= d * rows[j][k];
      }
      double norm = 0;
      for (double v : rows[i]) norm += v * v;
      norm = std::sqrt(norm);
      if (norm < 1e-6) continue;
      for (double& v : rows[i]) v /= norm;
      break;
    }
    for (int k = 0; k < n; ++k) w[static_cast<size_t>(i) * stride + k] = rows[i][k];
  }
}

}  // namespace

Params Network::init(uint64_t seed) const {
  Params p;
  p.values.assign(layout_.total(), 0.0);
  SplitMix64 rng(derive_seed(seed, 0x1417));
  for (const ParamEntry& e : layout_.entries()) {
    bool bias = e.shape.size() == 1 || e.name.ends_with(".b");
    bool zero_head = e.name.starts_with("head.") && e.name != "head.value.w";
    if (bias || zero_head) continue;
    double* w = p.values.data() + e.offset;
    if (e.name == "lstm.wh") {
      int n = cfg_.lstm;
      for (int g = 0; g < 4; ++g) orthogonal_block(rng, w + static_cast<size_t>(g) * n * n, n, n);
      continue;
    }
    size_t fan_in = e.size / e.shape[0];
    // He-style bound for ReLU layers, plain 1/sqrt(fan_in) for gate and value inputs.
    bool relu_in = !e.name.starts_with("lstm.") && !e.name.starts_with("core.") && e.name != "head.value.w";
    double bound = relu_in ? std::sqrt(6.0 / fan_in) : std::sqrt(1.0 / fan_in);
    for (size_t i = 0; i < e.size; ++i) w[i] = (2.0 * rng.uniform() - 1.0) * bound;
  }
  p.round_to_float();
  return p;
}

void Network::check_obs(const Observation& obs) const {
  const size_t image = static_cast<size_t>(cfg_.image_channels) * cfg_.image_size * cfg_.image_size;
  if (obs.image_size != cfg_.image_size || obs.image.size() != image)
    throw ContractError("observation image does not match net.image_size");
  if (obs.unit_width != cfg_.unit_width || obs.units.size() != obs.num_units() * cfg_.unit_width)
    throw ContractError("observation unit width does not match the network");
  if (static_cast<int>(obs.global.size()) != cfg_.global_width)
    throw ContractError("observation global width does not match the network");
  for (size_t i = 1; i < obs.unit_types.size(); ++i)
    if (obs.unit_types[i] < obs.unit_types[i - 1])
      throw ContractError("observation units are not grouped by type");
}

Network::StepVars Network::step(Tape& tape, const Observation& obs, Tape::Var h, Tape::Var c) const {
  check_obs(obs);
  const NetConfig& k = cfg_;
  StepVars out;

  Tape::Var img = tape.input(std::span<const float>(obs.image));
  img = tape.relu(tape.conv2d(img, k.image_channels, k.image_size, k.image_size, off_.conv1_w, off_.conv1_b,
                              k.conv1, 3, 1, 1));
  img = tape.relu(tape.conv2d(img, k.conv1, conv1_out_, conv1_out_, off_.conv2_w, off_.conv2_b, k.conv2, 3, 2, 1));
  Tape::Var h_img = tape.relu(tape.linear(img, off_.img_w, off_.img_b, k.image_hidden));

  std::vector<Tape::Var> parts{h_img};
  std::vector<Tape::Var> keys;
  size_t begin = 0;
  for (int t = 0; t < 4; ++t) {
    size_t end = begin;
    while (end < obs.num_units() && static_cast<int>(obs.unit_types[end]) == t) ++end;
    if (end == begin) {
      parts.push_back(tape.zeros(1, k.unit_hidden));
      continue;
    }
    std::span<const float> rows(obs.units.data() + begin * k.unit_width, (end - begin) * k.unit_width);
    Tape::Var u = tape.input(rows, static_cast<int>(end - begin));
    u = tape.relu(tape.linear(u, off_.unit1_w[t], off_.unit1_b[t], k.unit_hidden));
    u = tape.linear(u, off_.unit2_w[t], off_.unit2_b[t], k.unit_hidden + k.key_width);
    Tape::Var rep = tape.relu(tape.slice_cols(u, 0, k.unit_hidden));
    parts.push_back(tape.max_rows(rep));
    if (k.use_attention) keys.push_back(tape.slice_cols(u, k.unit_hidden, k.key_width));
    begin = end;
  }
  if (begin != obs.num_units()) throw ContractError("observation has an unknown unit type");

  Tape::Var g = tape.input(std::span<const float>(obs.global));
  parts.push_back(tape.relu(tape.linear(g, off_.glob_w, off_.glob_b, k.global_hidden)));
  Tape::Var x = tape.relu(tape.linear(tape.concat(parts), off_.trunk_w, off_.trunk_b, k.trunk));

  if (k.use_lstm) {
    Tape::Var z = tape.add(tape.linear(x, off_.lstm_wx, off_.lstm_b, 4 * k.lstm),
                           tape.linear(h, off_.lstm_wh, Tape::npos, 4 * k.lstm));
    Tape::Var gi = tape.sigmoid(tape.slice_cols(z, 0, k.lstm));
    Tape::Var gf = tape.sigmoid(tape.slice_cols(z, k.lstm, k.lstm));
    Tape::Var gg = tape.tanh(tape.slice_cols(z, 2 * k.lstm, k.lstm));
    Tape::Var go = tape.sigmoid(tape.slice_cols(z, 3 * k.lstm, k.lstm));
    out.c = tape.add(tape.mul(gf, c), tape.mul(gi, gg));
    out.h = tape.mul(go, tape.tanh(out.c));
  } else {
    out.h = tape.tanh(tape.linear(x, off_.lstm_wx, off_.lstm_b, k.lstm));
    out.c = c;
  }

  for (int head = 0; head < kNumHeads; ++head) {
    if (head == kTargetHead && k.use_attention) {
      Tape::Var q = tape.linear(out.h, off_.query_w, Tape::npos, k.key_width);
      out.logits[head] = tape.row_dot(tape.stack_rows(keys), q);
    } else {
      out.logits[head] = tape.linear(out.h, off_.head_w[head], off_.head_b[head], k.head_width(head));
    }
  }
  out.value = tape.linear(out.h, off_.value_w, off_.value_b, 1);
  return out;
}

std::vector<Network::StepVars> Network::unroll(Tape& tape, std::span<const Observation* const> obs,
                                               const HiddenState& entry) const {
  Tape::Var h = tape.input(std::span<const double>(entry.h));
  Tape::Var c = tape.input(std::span<const double>(entry.c));
  std::vector<StepVars> steps;
  steps.reserve(obs.size());
  for (const Observation* o : obs) {
    steps.push_back(step(tape, *o, h, c));
    h = steps.back().h;
    c = steps.back().c;
  }
  return steps;
}

PolicyOutput Network::forward(const Params& params, const Observation& obs, HiddenState& hidden) const {
  if (params.values.size() != layout_.total()) throw ContractError("params do not match the network layout");
  Tape tape(params.values);
  Tape::Var h = tape.input(std::span<const double>(hidden.h));
  Tape::Var c = tape.input(std::span<const double>(hidden.c));
  StepVars s = step(tape, obs, h, c);
  PolicyOutput out;
  for (int k = 0; k < kNumHeads; ++k) {
    auto v = tape.value(s.logits[k]);
    out.logits[k].assign(v.begin(), v.end());
    for (double x : v)
      if (!std::isfinite(x)) throw ContractError(std::string("non-finite logit in head ") + head_name(k));
  }
  out.value = tape.scalar(s.value);
  if (!std::isfinite(out.value)) throw ContractError("non-finite value head output");
  auto hv = tape.value(s.h), cv = tape.value(s.c);
  hidden.h.assign(hv.begin(), hv.end());
  hidden.c.assign(cv.begin(), cv.end());
  return out;
}

void Network::check_finite(const Params& params) const {
  for (const ParamEntry& e : layout_.entries())
    for (size_t i = 0; i < e.size; ++i)
      if (!std::isfinite(params.values[e.offset + i]))
        throw ContractError("non-finite parameter in layer " + e.name);
}

}  // namespace moba::net
