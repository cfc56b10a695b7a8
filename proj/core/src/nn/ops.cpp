// Copyright 2026 The dvlcal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dvlcal/nn/ops.hpp"

#include <cmath>
#include <string>

#include <Eigen/Core>

#include "dvlcal/errors.hpp"

namespace dvlcal::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* name) {
  require(t.defined() && t.rank() == rank, std::string(op) + ": " + name + " must have rank " + std::to_string(rank) +
                                               (t.defined() ? ", got " + shape_string(t.shape()) : ""));
}

void require_bias(const Tensor& b, std::size_t n, const char* op) {
  if (!b.defined()) return;
  require(b.rank() == 1 && b.dim(0) == n, std::string(op) + ": bias must have shape [" + std::to_string(n) + "]");
}

thread_local ActivationPattern* active_pattern = nullptr;

}  // namespace

ActivationPattern::ActivationPattern() : previous_(active_pattern) { active_pattern = this; }

ActivationPattern::~ActivationPattern() { active_pattern = previous_; }

void ActivationPattern::record(bool negative) noexcept {
  hash_ = (hash_ ^ (negative ? 1U : 0U)) * 0x100000001b3ULL;
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank(x, 2, "affine", "input");
  require_rank(w, 2, "affine", "weight");
  const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(0);
  require(w.dim(1) == in, "affine: weight " + shape_string(w.shape()) + " does not match input " +
                              shape_string(x.shape()));
  require_bias(b, out, "affine");

  std::vector<double> z(batch * out);
  const auto bi = static_cast<Eigen::Index>(batch), ii = static_cast<Eigen::Index>(in),
             oi = static_cast<Eigen::Index>(out);
  Map zm(z.data(), bi, oi);
  zm.noalias() = ConstMap(x.values().data(), bi, ii) * ConstMap(w.values().data(), oi, ii).transpose();
  if (b.defined()) {
    const Eigen::Map<const Eigen::RowVectorXd> bv(b.values().data(), oi);
    zm.rowwise() += bv;
  }

  auto xn = x.node(), wn = w.node();
  auto bn = b.defined() ? b.node() : nullptr;
  return Tensor::from_op({batch, out}, std::move(z), {x, w, b}, [xn, wn, bn, bi, ii, oi](const detail::Node& self) {
    const ConstMap dz(self.grad.data(), bi, oi);
    if (xn->requires_grad) {
      Map(xn->ensure_grad().data(), bi, ii).noalias() += dz * ConstMap(wn->values.data(), oi, ii);
    }
    if (wn->requires_grad) {
      Map(wn->ensure_grad().data(), oi, ii).noalias() += dz.transpose() * ConstMap(xn->values.data(), bi, ii);
    }
    if (bn && bn->requires_grad) {
      Eigen::Map<Eigen::RowVectorXd>(bn->ensure_grad().data(), oi) += dz.colwise().sum();
    }
  });
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank(x, 3, "conv1d", "input");
  require_rank(w, 3, "conv1d", "kernel");
  const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  require(w.dim(1) == cin, "conv1d: kernel channels do not match input");
  require(k >= 1 && len >= k, "conv1d: input length " + std::to_string(len) + " shorter than kernel " +
                                  std::to_string(k));
  require_bias(b, cout, "conv1d");
  const std::size_t lout = len - k + 1;

  const auto xv = x.values();
  const auto wv = w.values();
  std::vector<double> y(batch * cout * lout);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t co = 0; co < cout; ++co) {
      double* yrow = &y[(n * cout + co) * lout];
      const double bias = b.defined() ? b.values()[co] : 0.0;
      for (std::size_t j = 0; j < lout; ++j) yrow[j] = bias;
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double* xrow = &xv[(n * cin + ci) * len];
        const double* kw = &wv[(co * cin + ci) * k];
        for (std::size_t t = 0; t < k; ++t) {
          for (std::size_t j = 0; j < lout; ++j) yrow[j] += kw[t] * xrow[j + t];
        }
      }
    }
  }

  auto xn = x.node(), wn = w.node();
  auto bn = b.defined() ? b.node() : nullptr;
  return Tensor::from_op({batch, cout, lout}, std::move(y), {x, w, b},
                         [=](const detail::Node& self) {
                           const double* dy = self.grad.data();
                           double* dx = xn->requires_grad ? xn->ensure_grad().data() : nullptr;
                           double* dw = wn->requires_grad ? wn->ensure_grad().data() : nullptr;
                           double* db = bn && bn->requires_grad ? bn->ensure_grad().data() : nullptr;
                           for (std::size_t n = 0; n < batch; ++n) {
                             for (std::size_t co = 0; co < cout; ++co) {
                               const double* g = dy + (n * cout + co) * lout;
                               if (db) {
                                 for (std::size_t j = 0; j < lout; ++j) db[co] += g[j];
                               }
                               for (std::size_t ci = 0; ci < cin; ++ci) {
                                 const std::size_t xoff = (n * cin + ci) * len;
                                 const std::size_t woff = (co * cin + ci) * k;
                                 for (std::size_t t = 0; t < k; ++t) {
                                   double acc = 0.0;
                                   for (std::size_t j = 0; j < lout; ++j) {
                                     acc += g[j] * xn->values[xoff + j + t];
                                     if (dx) dx[xoff + j + t] += g[j] * wn->values[woff + t];
                                   }
                                   if (dw) dw[woff + t] += acc;
                                 }
                               }
                             }
                           }
                         });
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, Dilation dilation) {
  require_rank(x, 4, "conv2d", "input");
  require_rank(w, 4, "conv2d", "kernel");
  const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const std::size_t dh = dilation.rows, dw = dilation.cols;
  require(w.dim(1) == cin, "conv2d: kernel channels do not match input");
  require(kh >= 1 && kw >= 1 && dh >= 1 && dw >= 1, "conv2d: kernel and dilation must be positive");
  const std::size_t ext_h = (kh - 1) * dh + 1, ext_w = (kw - 1) * dw + 1;
  require(ext_h <= h && ext_w <= wd, "conv2d: dilated kernel extent " + std::to_string(ext_h) + "x" +
                                         std::to_string(ext_w) + " exceeds input " + std::to_string(h) + "x" +
                                         std::to_string(wd));
  require_bias(b, cout, "conv2d");
  const std::size_t ho = h - ext_h + 1, wo = wd - ext_w + 1;

  const auto xv = x.values();
  const auto wv = w.values();
  std::vector<double> y(batch * cout * ho * wo);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t co = 0; co < cout; ++co) {
      double* yplane = &y[(n * cout + co) * ho * wo];
      const double bias = b.defined() ? b.values()[co] : 0.0;
      for (std::size_t i = 0; i < ho * wo; ++i) yplane[i] = bias;
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double* xplane = &xv[(n * cin + ci) * h * wd];
        const double* kern = &wv[(co * cin + ci) * kh * kw];
        for (std::size_t a = 0; a < kh; ++a) {
          for (std::size_t c = 0; c < kw; ++c) {
            const double wt = kern[a * kw + c];
            for (std::size_t i = 0; i < ho; ++i) {
              const double* xr = xplane + (i + a * dh) * wd + c * dw;
              double* yr = yplane + i * wo;
              for (std::size_t j = 0; j < wo; ++j) yr[j] += wt * xr[j];
            }
          }
        }
      }
    }
  }

  auto xn = x.node(), wn = w.node();
  auto bn = b.defined() ? b.node() : nullptr;
  return Tensor::from_op(
      {batch, cout, ho, wo}, std::move(y), {x, w, b}, [=](const detail::Node& self) {
        const double* dy = self.grad.data();
        double* dx = xn->requires_grad ? xn->ensure_grad().data() : nullptr;
        double* dwt = wn->requires_grad ? wn->ensure_grad().data() : nullptr;
        double* db = bn && bn->requires_grad ? bn->ensure_grad().data() : nullptr;
        const double* xv = xn->values.data();
        const double* wv = wn->values.data();
        for (std::size_t n = 0; n < batch; ++n) {
          for (std::size_t co = 0; co < cout; ++co) {
            const double* g = dy + (n * cout + co) * ho * wo;
            if (db) {
              for (std::size_t i = 0; i < ho * wo; ++i) db[co] += g[i];
            }
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const std::size_t xoff = (n * cin + ci) * h * wd;
              const std::size_t woff = (co * cin + ci) * kh * kw;
              for (std::size_t a = 0; a < kh; ++a) {
                for (std::size_t c = 0; c < kw; ++c) {
                  const double wt = wv[woff + a * kw + c];
                  double acc = 0.0;
                  for (std::size_t i = 0; i < ho; ++i) {
                    const std::size_t xr = xoff + (i + a * dh) * wd + c * dw;
                    const double* gr = g + i * wo;
                    for (std::size_t j = 0; j < wo; ++j) {
                      acc += gr[j] * xv[xr + j];
                      if (dx) dx[xr + j] += gr[j] * wt;
                    }
                  }
                  if (dwt) dwt[woff + a * kw + c] += acc;
                }
              }
            }
          }
        }
      });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  std::vector<double> y(x.values().begin(), x.values().end());
  for (auto& v : y) v = v >= 0.0 ? v : slope * v;
  if (active_pattern != nullptr) {
    for (const double v : x.values()) active_pattern->record(v < 0.0);
  }
  auto xn = x.node();
  return Tensor::from_op(x.shape(), std::move(y), {x}, [xn, slope](const detail::Node& self) {
    auto& dx = xn->ensure_grad();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i] * (xn->values[i] >= 0.0 ? 1.0 : slope);
  });
}

Tensor tanh(const Tensor& x) {
  std::vector<double> y(x.values().begin(), x.values().end());
  for (auto& v : y) v = std::tanh(v);
  auto xn = x.node();
  return Tensor::from_op(x.shape(), std::move(y), {x}, [xn](const detail::Node& self) {
    auto& dx = xn->ensure_grad();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i] * (1.0 - self.values[i] * self.values[i]);
  });
}

Tensor multiply_constant(const Tensor& x, std::vector<double> mask) {
  require(mask.size() == x.numel(), "multiply_constant: mask size does not match input");
  std::vector<double> y(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i];
  auto xn = x.node();
  return Tensor::from_op(x.shape(), std::move(y), {x}, [xn, mask = std::move(mask)](const detail::Node& self) {
    auto& dx = xn->ensure_grad();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i] * mask[i];
  });
}

Tensor dropout(const Tensor& x, double p, Mode mode, Rng& rng) {
  require(p >= 0.0 && p < 1.0, "dropout: probability must be in [0, 1)");
  if (mode == Mode::eval || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.numel());
  for (auto& m : mask) m = rng.bernoulli(1.0 - p) ? keep_scale : 0.0;
  return multiply_constant(x, std::move(mask));
}

Tensor flatten(const Tensor& x) {
  require(x.defined() && x.rank() >= 1, "flatten: input must have rank >= 1");
  const std::size_t batch = x.dim(0);
  const std::size_t rest = batch == 0 ? 0 : x.numel() / batch;
  auto xn = x.node();
  return Tensor::from_op({batch, rest}, std::vector<double>(x.values().begin(), x.values().end()), {x},
                         [xn](const detail::Node& self) {
                           auto& dx = xn->ensure_grad();
                           for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i];
                         });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "concat", "first input");
  require_rank(b, 2, "concat", "second input");
  require(a.dim(0) == b.dim(0), "concat: batch sizes differ");
  const std::size_t batch = a.dim(0), na = a.dim(1), nb = b.dim(1);
  std::vector<double> y(batch * (na + nb));
  for (std::size_t n = 0; n < batch; ++n) {
    std::copy_n(a.values().begin() + n * na, na, y.begin() + n * (na + nb));
    std::copy_n(b.values().begin() + n * nb, nb, y.begin() + n * (na + nb) + na);
  }
  auto an = a.node(), bn = b.node();
  return Tensor::from_op({batch, na + nb}, std::move(y), {a, b}, [=](const detail::Node& self) {
    if (an->requires_grad) {
      auto& da = an->ensure_grad();
      for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t i = 0; i < na; ++i) da[n * na + i] += self.grad[n * (na + nb) + i];
      }
    }
    if (bn->requires_grad) {
      auto& dbv = bn->ensure_grad();
      for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t i = 0; i < nb; ++i) dbv[n * nb + i] += self.grad[n * (na + nb) + na + i];
      }
    }
  });
}

Tensor mse(const Tensor& pred, const Tensor& target) {
  require(pred.defined() && target.defined() && pred.shape() == target.shape(),
          "mse: shapes differ (" + (pred.defined() ? shape_string(pred.shape()) : "?") + " vs " +
              (target.defined() ? shape_string(target.shape()) : "?") + ")");
  const std::size_t n = pred.numel();
  require(n > 0, "mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred.values()[i] - target.values()[i];
    sum += d * d;
  }
  auto pn = pred.node(), tn = target.node();
  return Tensor::from_op({1}, {sum / static_cast<double>(n)}, {pred, target}, [pn, tn, n](const detail::Node& self) {
    const double scale = 2.0 * self.grad[0] / static_cast<double>(n);
    if (pn->requires_grad) {
      auto& dp = pn->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) dp[i] += scale * (pn->values[i] - tn->values[i]);
    }
    if (tn->requires_grad) {
      auto& dt = tn->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) dt[i] -= scale * (pn->values[i] - tn->values[i]);
    }
  });
}

Tensor weighted_sum(const Tensor& x, std::vector<double> weights) {
  require(weights.size() == x.numel(), "weighted_sum: weight count does not match input");
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) sum += weights[i] * x.values()[i];
  auto xn = x.node();
  return Tensor::from_op({1}, {sum}, {x}, [xn, weights = std::move(weights)](const detail::Node& self) {
    auto& dx = xn->ensure_grad();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[0] * weights[i];
  });
}

}  // namespace dvlcal::nn
