#include "moba/net/tape.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <memory>

#include "moba/common/error.h"

namespace moba::net {

Tape::Tape(std::span<const double> params, std::span<double> grad) : params_(params), grad_(grad) {
  nodes_.reserve(256);
}

void Tape::note_branch(uint64_t id) {
  branch_sig_ ^= id + 0x9e3779b97f4a7c15ULL + (branch_sig_ << 6) + (branch_sig_ >> 2);
}

Tape::Var Tape::push(int rows, int cols) {
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.value.assign(static_cast<size_t>(rows) * cols, 0.0);
  if (recording()) n.grad.assign(n.value.size(), 0.0);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::input(std::span<const double> values, int rows) {
  int cols = rows == 0 ? 0 : static_cast<int>(values.size()) / rows;
  Var v = push(rows, cols);
  std::copy(values.begin(), values.end(), nodes_[v].value.begin());
  return v;
}

Tape::Var Tape::input(std::span<const float> values, int rows) {
  int cols = rows == 0 ? 0 : static_cast<int>(values.size()) / rows;
  Var v = push(rows, cols);
  std::copy(values.begin(), values.end(), nodes_[v].value.begin());
  return v;
}

Tape::Var Tape::zeros(int rows, int cols) { return push(rows, cols); }

Tape::Var Tape::linear(Var x, size_t w_off, size_t b_off, int out) {
  const int n = nodes_[x].rows, in = nodes_[x].cols;
  Var y = push(n, out);
  {
    const double* W = params_.data() + w_off;
    const double* X = nodes_[x].value.data();
    double* Y = nodes_[y].value.data();
    for (int r = 0; r < n; ++r) {
      const double* xr = X + static_cast<size_t>(r) * in;
      double* yr = Y + static_cast<size_t>(r) * out;
      for (int o = 0; o < out; ++o) {
        const double* w = W + static_cast<size_t>(o) * in;
        double acc = b_off == npos ? 0.0 : params_[b_off + o];
        for (int i = 0; i < in; ++i) acc += w[i] * xr[i];
        yr[o] = acc;
      }
    }
  }
  if (recording()) {
    nodes_[y].backward = [this, x, y, w_off, b_off, n, in, out] {
      const double* W = params_.data() + w_off;
      const double* X = nodes_[x].value.data();
      const double* GY = nodes_[y].grad.data();
      double* GX = nodes_[x].grad.data();
      double* GW = grad_.data() + w_off;
      for (int r = 0; r < n; ++r) {
        const double* xr = X + static_cast<size_t>(r) * in;
        const double* gy = GY + static_cast<size_t>(r) * out;
        double* gx = GX + static_cast<size_t>(r) * in;
        for (int o = 0; o < out; ++o) {
          double go = gy[o];
          if (go == 0.0) continue;
          const double* w = W + static_cast<size_t>(o) * in;
          double* gw = GW + static_cast<size_t>(o) * in;
          for (int i = 0; i < in; ++i) {
            gx[i] += w[i] * go;
            gw[i] += xr[i] * go;
          }
          if (b_off != npos) grad_[b_off + o] += go;
        }
      }
    };
  }
  return y;
}

Tape::Var Tape::conv2d(Var x, int cin, int h, int w, size_t w_off, size_t b_off, int cout, int k,
                       int stride, int pad) {
  assert(nodes_[x].value.size() == static_cast<size_t>(cin * h * w));
  const int ho = conv_out(h, k, stride, pad), wo = conv_out(w, k, stride, pad);
  Var y = push(1, cout * ho * wo);
  {
    const double* W = params_.data() + w_off;
    const double* X = nodes_[x].value.data();
    double* Y = nodes_[y].value.data();
    for (int co = 0; co < cout; ++co) {
      double bias = b_off == npos ? 0.0 : params_[b_off + co];
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
          double acc = bias;
          for (int ci = 0; ci < cin; ++ci) {
            const double* wk = W + ((static_cast<size_t>(co) * cin + ci) * k) * k;
            const double* xc = X + static_cast<size_t>(ci) * h * w;
            for (int ky = 0; ky < k; ++ky) {
              int iy = oy * stride - pad + ky;
              if (iy < 0 || iy >= h) continue;
              for (int kx = 0; kx < k; ++kx) {
                int ix = ox * stride - pad + kx;
                if (ix < 0 || ix >= w) continue;
                acc += wk[ky * k + kx] * xc[iy * w + ix];
              }
            }
          }
          Y[(static_cast<size_t>(co) * ho + oy) * wo + ox] = acc;
        }
      }
    }
  }
  if (recording()) {
    nodes_[y].backward = [this, x, y, cin, h, w, w_off, b_off, cout, k, stride, pad, ho, wo] {
      const double* W = params_.data() + w_off;
      const double* X = nodes_[x].value.data();
      const double* GY = nodes_[y].grad.data();
      double* GX = nodes_[x].grad.data();
      double* GW = grad_.data() + w_off;
      for (int co = 0; co < cout; ++co) {
        for (int oy = 0; oy < ho; ++oy) {
          for (int ox = 0; ox < wo; ++ox) {
            double go = GY[(static_cast<size_t>(co) * ho + oy) * wo + ox];
            if (go == 0.0) continue;
            if (b_off != npos) grad_[b_off + co] += go;
            for (int ci = 0; ci < cin; ++ci) {
              size_t wbase = ((static_cast<size_t>(co) * cin + ci) * k) * k;
              size_t xbase = static_cast<size_t>(ci) * h * w;
              for (int ky = 0; ky < k; ++ky) {
                int iy = oy * stride - pad + ky;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < k; ++kx) {
                  int ix = ox * stride - pad + kx;
                  if (ix < 0 || ix >= w) continue;
                  GW[wbase + ky * k + kx] += X[xbase + iy * w + ix] * go;
                  GX[xbase + iy * w + ix] += W[wbase + ky * k + kx] * go;
                }
              }
            }
          }
        }
      }
    };
  }
  return y;
}

Tape::Var Tape::relu(Var x) {
  Var y = push(nodes_[x].rows, nodes_[x].cols);
  const auto& X = nodes_[x].value;
  auto& Y = nodes_[y].value;
  for (size_t i = 0; i < X.size(); ++i) {
    Y[i] = X[i] > 0 ? X[i] : 0.0;
    if (track_branches_) note_branch(X[i] > 0 ? 2 * i + 1 : 2 * i);
  }
  if (recording()) {
    nodes_[y].backward = [this, x, y] {
      const auto& X = nodes_[x].value;
      const auto& GY = nodes_[y].grad;
      auto& GX = nodes_[x].grad;
      for (size_t i = 0; i < X.size(); ++i)
        if (X[i] > 0) GX[i] += GY[i];
    };
  }
  return y;
}

Tape::Var Tape::sigmoid(Var x) {
  Var y = push(nodes_[x].rows, nodes_[x].cols);
  const auto& X = nodes_[x].value;
  auto& Y = nodes_[y].value;
  for (size_t i = 0; i < X.size(); ++i) Y[i] = 1.0 / (1.0 + std::exp(-X[i]));
  if (recording()) {
    nodes_[y].backward = [this, x, y] {
      const auto& Y = nodes_[y].value;
      const auto& GY = nodes_[y].grad;
      auto& GX = nodes_[x].grad;
      for (size_t i = 0; i < Y.size(); ++i) GX[i] += GY[i] * Y[i] * (1.0 - Y[i]);
    };
  }
  return y;
}

Tape::Var Tape::tanh(Var x) {
  Var y = push(nodes_[x].rows, nodes_[x].cols);
  const auto& X = nodes_[x].value;
  auto& Y = nodes_[y].value;
  for (size_t i = 0; i < X.size(); ++i) Y[i] = std::tanh(X[i]);
  if (recording()) {
    nodes_[y].backward = [this, x, y] {
      const auto& Y = nodes_[y].value;
      const auto& GY = nodes_[y].grad;
      auto& GX = nodes_[x].grad;
      for (size_t i = 0; i < Y.size(); ++i) GX[i] += GY[i] * (1.0 - Y[i] * Y[i]);
    };
  }
  return y;
}

Tape::Var Tape::add(Var a, Var b) {
  assert(nodes_[a].value.size() == nodes_[b].value.size());
  Var y = push(nodes_[a].rows, nodes_[a].cols);
  for (size_t i = 0; i < nodes_[y].value.size(); ++i)
    nodes_[y].value[i] = nodes_[a].value[i] + nodes_[b].value[i];
  if (recording()) {
    nodes_[y].backward = [this, a, b, y] {
      const auto& GY = nodes_[y].grad;
      for (size_t i = 0; i < GY.size(); ++i) {
        nodes_[a].grad[i] += GY[i];
        nodes_[b].grad[i] += GY[i];
      }
    };
  }
  return y;
}

Tape::Var Tape::mul(Var a, Var b) {
  assert(nodes_[a].value.size() == nodes_[b].value.size());
  Var y = push(nodes_[a].rows, nodes_[a].cols);
  for (size_t i = 0; i < nodes_[y].value.size(); ++i)
    nodes_[y].value[i] = nodes_[a].value[i] * nodes_[b].value[i];
  if (recording()) {
    nodes_[y].backward = [this, a, b, y] {
      const auto& GY = nodes_[y].grad;
      for (size_t i = 0; i < GY.size(); ++i) {
        nodes_[a].grad[i] += GY[i] * nodes_[b].value[i];
        nodes_[b].grad[i] += GY[i] * nodes_[a].value[i];
      }
    };
  }
  return y;
}

Tape::Var Tape::slice_cols(Var x, int begin, int len) {
  const int n = nodes_[x].rows, c = nodes_[x].cols;
  assert(begin >= 0 && begin + len <= c);
  Var y = push(n, len);
  for (int r = 0; r < n; ++r)
    for (int j = 0; j < len; ++j)
      nodes_[y].value[static_cast<size_t>(r) * len + j] =
          nodes_[x].value[static_cast<size_t>(r) * c + begin + j];
  if (recording()) {
    nodes_[y].backward = [this, x, y, begin, len, n, c] {
      for (int r = 0; r < n; ++r)
        for (int j = 0; j < len; ++j)
          nodes_[x].grad[static_cast<size_t>(r) * c + begin + j] +=
              nodes_[y].grad[static_cast<size_t>(r) * len + j];
    };
  }
  return y;
}

Tape::Var Tape::concat(std::span<const Var> parts) {
  int total = 0;
  for (Var p : parts) total += static_cast<int>(nodes_[p].value.size());
  Var y = push(1, total);
  size_t off = 0;
  for (Var p : parts) {
    std::copy(nodes_[p].value.begin(), nodes_[p].value.end(), nodes_[y].value.begin() + off);
    off += nodes_[p].value.size();
  }
  if (recording()) {
    std::vector<Var> ps(parts.begin(), parts.end());
    nodes_[y].backward = [this, ps, y] {
      size_t off = 0;
      for (Var p : ps) {
        auto& gp = nodes_[p].grad;
        for (size_t i = 0; i < gp.size(); ++i) gp[i] += nodes_[y].grad[off + i];
        off += gp.size();
      }
    };
  }
  return y;
}

Tape::Var Tape::stack_rows(std::span<const Var> parts) {
  int rows = 0, cols = parts.empty() ? 0 : nodes_[parts[0]].cols;
  for (Var p : parts) {
    if (nodes_[p].cols != cols && nodes_[p].rows > 0) throw ContractError("stack_rows: column mismatch");
    rows += nodes_[p].rows;
  }
  Var y = push(rows, cols);
  size_t off = 0;
  for (Var p : parts) {
    std::copy(nodes_[p].value.begin(), nodes_[p].value.end(), nodes_[y].value.begin() + off);
    off += nodes_[p].value.size();
  }
  if (recording()) {
    std::vector<Var> ps(parts.begin(), parts.end());
    nodes_[y].backward = [this, ps, y] {
      size_t off = 0;
      for (Var p : ps) {
        auto& gp = nodes_[p].grad;
        for (size_t i = 0; i < gp.size(); ++i) gp[i] += nodes_[y].grad[off + i];
        off += gp.size();
      }
    };
  }
  return y;
}

Tape::Var Tape::max_rows(Var x) {
  const int n = nodes_[x].rows, c = nodes_[x].cols;
  Var y = push(1, c);
  std::vector<int> arg(c, -1);
  for (int j = 0; j < c; ++j) {
    double best = 0.0;
    for (int r = 0; r < n; ++r) {
      double v = nodes_[x].value[static_cast<size_t>(r) * c + j];
      if (arg[j] < 0 || v > best) {
        best = v;
        arg[j] = r;
      }
    }
    nodes_[y].value[j] = arg[j] < 0 ? 0.0 : best;
    if (track_branches_) note_branch(static_cast<uint64_t>(j) * 1000003u + arg[j] + 1);
  }
  if (recording()) {
    nodes_[y].backward = [this, x, y, arg, c] {
      for (int j = 0; j < c; ++j)
        if (arg[j] >= 0) nodes_[x].grad[static_cast<size_t>(arg[j]) * c + j] += nodes_[y].grad[j];
    };
  }
  return y;
}

Tape::Var Tape::row_dot(Var x, Var q) {
  const int n = nodes_[x].rows, c = nodes_[x].cols;
  if (static_cast<int>(nodes_[q].value.size()) != c)
    throw ContractError("row_dot: query width " + std::to_string(nodes_[q].value.size()) +
                        " != key width " + std::to_string(c));
  Var y = push(1, n);
  for (int r = 0; r < n; ++r) {
    double acc = 0;
    for (int j = 0; j < c; ++j) acc += nodes_[x].value[static_cast<size_t>(r) * c + j] * nodes_[q].value[j];
    nodes_[y].value[r] = acc;
  }
  if (recording()) {
    nodes_[y].backward = [this, x, q, y, n, c] {
      for (int r = 0; r < n; ++r) {
        double go = nodes_[y].grad[r];
        for (int j = 0; j < c; ++j) {
          nodes_[x].grad[static_cast<size_t>(r) * c + j] += go * nodes_[q].value[j];
          nodes_[q].grad[j] += go * nodes_[x].value[static_cast<size_t>(r) * c + j];
        }
      }
    };
  }
  return y;
}

Tape::Var Tape::scalar_fn(Var x, const ScalarFn& fn) {
  Var y = push(1, 1);
  auto dx = std::make_shared<std::vector<double>>(nodes_[x].value.size(), 0.0);
  nodes_[y].value[0] = fn(nodes_[x].value, *dx);
  if (recording()) {
    nodes_[y].backward = [this, x, y, dx] {
      double go = nodes_[y].grad[0];
      for (size_t i = 0; i < dx->size(); ++i) nodes_[x].grad[i] += go * (*dx)[i];
    };
  }
  return y;
}

Tape::Var Tape::sum(std::span<const Var> scalars) {
  Var y = push(1, 1);
  double acc = 0;
  for (Var s : scalars) acc += nodes_[s].value[0];
  nodes_[y].value[0] = acc;
  if (recording()) {
    std::vector<Var> ss(scalars.begin(), scalars.end());
    nodes_[y].backward = [this, ss, y] {
      for (Var s : ss) nodes_[s].grad[0] += nodes_[y].grad[0];
    };
  }
  return y;
}

void Tape::backward(Var out) {
  if (!recording()) throw ContractError("backward on a tape without a gradient buffer");
  nodes_[out].grad[0] += 1.0;
  for (Var v = out; v >= 0; --v)
    if (nodes_[v].backward) nodes_[v].backward();
}

}  // namespace moba::net
