#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace moba::net {

// Reverse-mode autodiff over dense row-major matrices (vectors are 1 x n).
//
// Parameters are not tape nodes: ops that own weights read them straight out
// of the flat parameter vector by offset and, when a gradient buffer is
// attached, accumulate into the same offsets of that buffer.
class Tape {
 public:
  using Var = int;

  // `grad` may be null for inference; nothing is recorded for backward then.
  Tape(std::span<const double> params, std::span<double> grad = {});

  bool recording() const { return !grad_.empty(); }
  size_t size() const { return nodes_.size(); }

  Var input(std::span<const double> values, int rows = 1);
  Var input(std::span<const float> values, int rows = 1);
  Var zeros(int rows, int cols);

  // Y = X W^T + b for every row of X. W is [out x in] at `w_offset`; pass
  // `b_offset` = npos for no bias.
  static constexpr size_t npos = static_cast<size_t>(-1);
  Var linear(Var x, size_t w_offset, size_t b_offset, int out);

  // 2-D convolution on a [channels x height x width] input stored as one row.
  Var conv2d(Var x, int in_channels, int height, int width, size_t w_offset, size_t b_offset,
             int out_channels, int kernel, int stride, int pad);
  static int conv_out(int size, int kernel, int stride, int pad) {
    return (size + 2 * pad - kernel) / stride + 1;
  }

  Var relu(Var x);
  Var sigmoid(Var x);
  Var tanh(Var x);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  // Column slice [begin, begin + len) of every row.
  Var slice_cols(Var x, int begin, int len);
  // Concatenate row vectors (1 x n each) into one row.
  Var concat(std::span<const Var> parts);
  // Stack matrices with equal column counts vertically.
  Var stack_rows(std::span<const Var> parts);
  // Column-wise max over rows -> 1 x cols. Ties go to the first row.
  Var max_rows(Var x);
  // logits[i] = rows(x)[i] . q, q is 1 x cols -> 1 x rows.
  Var row_dot(Var x, Var q);

  // Scalar-valued op defined by a callback that returns f(x) and writes
  // df/dx into `dx` (same length as x).
  using ScalarFn = std::function<double(std::span<const double> x, std::span<double> dx)>;
  Var scalar_fn(Var x, const ScalarFn& fn);
  // Sum of 1 x 1 nodes.
  Var sum(std::span<const Var> scalars);

  std::span<const double> value(Var v) const { return nodes_[v].value; }
  double scalar(Var v) const { return nodes_[v].value[0]; }
  int rows(Var v) const { return nodes_[v].rows; }
  int cols(Var v) const { return nodes_[v].cols; }

  // Seeds d(out)/d(out) = 1 and propagates to every node and parameter.
  void backward(Var out);

  // Every piecewise branch decision taken so far (relu signs, max winners,
  // scalar_fn branch ids) folded into one hash. Finite-difference checks use
  // it to detect kink crossings.
  uint64_t branch_signature() const { return branch_sig_; }
  void note_branch(uint64_t id);
  void set_track_branches(bool on) { track_branches_ = on; }
  bool track_branches() const { return track_branches_; }

 private:
  struct Node {
    int rows = 1;
    int cols = 0;
    std::vector<double> value;
    std::vector<double> grad;
    std::function<void()> backward;
  };
  Var push(int rows, int cols);
  std::vector<double>& g(Var v) { return nodes_[v].grad; }

  std::span<const double> params_;
  std::span<double> grad_;
  std::vector<Node> nodes_;
  uint64_t branch_sig_ = 0xcbf29ce484222325ULL;
  bool track_branches_ = false;
};

}  // namespace moba::net
