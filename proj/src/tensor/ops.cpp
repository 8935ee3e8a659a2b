// SPDX-License-Identifier: Apache-2.0
#include "tanet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tanet::ops {

namespace {

enum class Broadcast { kNone, kLeft, kRight };

// Left means `a` is the (N, H, W, 1) operand broadcast against `b`.
Broadcast broadcast_mode(const Shape& a, const Shape& b, const char* op) {
  if (a == b) return Broadcast::kNone;
  const bool same_plane = a.batch() == b.batch() && a.height() == b.height() &&
                          a.width() == b.width();
  if (same_plane && a.channels() == 1) return Broadcast::kLeft;
  if (same_plane && b.channels() == 1) return Broadcast::kRight;
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.str() + " and " +
                   b.str());
}

template <typename T>
void accumulate(Tensor<T>* slot, const Tensor<T>& g) {
  if (slot) *slot += g;
}

Shape scalar_shape() { return Shape(1, 1, 1, 1); }

}  // namespace

template <std::floating_point T>
Var<T> relu(const Var<T>& x) {
  const auto& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > T(0) ? xv[i] : T(0);
  if (KinkProbe::enabled()) {
    for (std::size_t i = 0; i < xv.size(); ++i) KinkProbe::record(xv[i] > T(0));
  }
  return Tape<T>::emit("relu", std::move(out), {x},
                       [x](const Tensor<T>& gy, std::span<Tensor<T>*> grads) {
                         const auto& xv = x.value();
                         Tensor<T>& gx = *grads[0];
                         for (std::size_t i = 0; i < xv.size(); ++i) {
                           if (xv[i] > T(0)) gx[i] += gy[i];
                         }
                       });
}

template <std::floating_point T>
Var<T> sigmoid(const Var<T>& x) {
  const auto& xv = x.value();
  Tensor<T> out(xv.shape());
  // Saturated results are pulled back inside the open interval (0, 1).
  const T lo = std::numeric_limits<T>::min();
  const T hi = std::nextafter(T(1), T(0));
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const T v = xv[i];
    T s;
    if (v >= T(0)) {
      s = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      s = e / (T(1) + e);
    }
    out[i] = std::clamp(s, lo, hi);
  }
  Tensor<T> saved = out;
  return Tape<T>::emit("sigmoid", std::move(out), {x},
                       [saved = std::move(saved)](const Tensor<T>& gy,
                                                  std::span<Tensor<T>*> grads) {
                         Tensor<T>& gx = *grads[0];
                         for (std::size_t i = 0; i < saved.size(); ++i) {
                           gx[i] += gy[i] * saved[i] * (T(1) - saved[i]);
                         }
                       });
}

template <std::floating_point T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  const Broadcast mode = broadcast_mode(a.shape(), b.shape(), "add");
  const Shape out_shape = mode == Broadcast::kLeft ? b.shape() : a.shape();
  const std::size_t c = out_shape.channels();
  Tensor<T> out(out_shape);
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T x = mode == Broadcast::kLeft ? av[i / c] : av[i];
    const T y = mode == Broadcast::kRight ? bv[i / c] : bv[i];
    out[i] = x + y;
  }
  return Tape<T>::emit("add", std::move(out), {a, b},
                       [mode, c](const Tensor<T>& gy, std::span<Tensor<T>*> grads) {
                         for (std::size_t k = 0; k < 2; ++k) {
                           Tensor<T>* slot = grads[k];
                           if (!slot) continue;
                           const bool reduced = (k == 0 && mode == Broadcast::kLeft) ||
                                                (k == 1 && mode == Broadcast::kRight);
                           if (!reduced) {
                             *slot += gy;
                           } else {
                             for (std::size_t i = 0; i < gy.size(); ++i) {
                               (*slot)[i / c] += gy[i];
                             }
                           }
                         }
                       });
}

template <std::floating_point T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  const auto& av = a.value();
  const auto& bv = b.value();
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return Tape<T>::emit("sub", std::move(out), {a, b},
                       [](const Tensor<T>& gy, std::span<Tensor<T>*> grads) {
                         accumulate(grads[0], gy);
                         if (grads[1]) {
                           for (std::size_t i = 0; i < gy.size(); ++i) {
                             (*grads[1])[i] -= gy[i];
                           }
                         }
                       });
}

template <std::floating_point T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  const Broadcast mode = broadcast_mode(a.shape(), b.shape(), "mul");
  const Shape out_shape = mode == Broadcast::kLeft ? b.shape() : a.shape();
  const std::size_t c = out_shape.channels();
  Tensor<T> out(out_shape);
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T x = mode == Broadcast::kLeft ? av[i / c] : av[i];
    const T y = mode == Broadcast::kRight ? bv[i / c] : bv[i];
    out[i] = x * y;
  }
  return Tape<T>::emit(
      "mul", std::move(out), {a, b},
      [a, b, mode, c](const Tensor<T>& gy, std::span<Tensor<T>*> grads) {
        const auto& av = a.value();
        const auto& bv = b.value();
        for (std::size_t i = 0; i < gy.size(); ++i) {
          const std::size_t ia = mode == Broadcast::kLeft ? i / c : i;
          const std::size_t ib = mode == Broadcast::kRight ? i / c : i;
          if (grads[0]) (*grads[0])[ia] += gy[i] * bv[ib];
          if (grads[1]) (*grads[1])[ib] += gy[i] * av[ia];
        }
      });
}

template <std::floating_point T>
Var<T> scale(const Var<T>& x, T factor) {
  Tensor<T> out = x.value();
  for (auto& v : out.data()) v *= factor;
  return Tape<T>::emit("scale", std::move(out), {x},
                       [factor](const Tensor<T>& gy, std::span<Tensor<T>*> grads) {
                         Tensor<T>& gx = *grads[0];
                         for (std::size_t i = 0; i < gy.size(); ++i) {
                           gx[i] += factor * gy[i];
                         }
                       });
}

template <std::floating_point T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  const Shape& s0 = parts.front().shape();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.batch() != s0.batch() || s.height() != s0.height() ||
        s.width() != s0.width()) {
      throw ShapeError("concat_channels: spatial mismatch " + s0.str() + " vs " +
                       s.str());
    }
    widths.push_back(s.channels());
    total += s.channels();
  }
  const std::size_t pixels = s0.batch() * s0.height() * s0.width();
  Tensor<T> out(Shape(s0.batch(), s0.height(), s0.width(), total));
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& v = parts[k].value();
    const std::size_t w = widths[k];
    for (std::size_t p = 0; p < pixels; ++p) {
      for (std::size_t ch = 0; ch < w; ++ch) out[p * total + offset + ch] = v[p * w + ch];
    }
    offset += w;
  }
  return Tape<T>::emit("concat_channels", std::move(out), parts,
                       [widths, total, pixels](const Tensor<T>& gy,
                                               std::span<Tensor<T>*> grads) {
                         std::size_t offset = 0;
                         for (std::size_t k = 0; k < widths.size(); ++k) {
                           const std::size_t w = widths[k];
                           if (Tensor<T>* slot = grads[k]) {
                             for (std::size_t p = 0; p < pixels; ++p) {
                               for (std::size_t ch = 0; ch < w; ++ch) {
                                 (*slot)[p * w + ch] += gy[p * total + offset + ch];
                               }
                             }
                           }
                           offset += w;
                         }
                       });
}

template <std::floating_point T>
Var<T> slice_channels(const Var<T>& x, std::size_t begin, std::size_t count) {
  const Shape& s = x.shape();
  if (count == 0 || begin + count > s.channels()) {
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " +
                     std::to_string(s.channels()) + " channels");
  }
  const std::size_t pixels = s.batch() * s.height() * s.width();
  const std::size_t total = s.channels();
  Tensor<T> out(Shape(s.batch(), s.height(), s.width(), count));
  const auto& v = x.value();
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t ch = 0; ch < count; ++ch) out[p * count + ch] = v[p * total + begin + ch];
  }
  return Tape<T>::emit(
      "slice_channels", std::move(out), {x},
      [begin, count, total, pixels](const Tensor<T>& gy, std::span<Tensor<T>*> grads) {
        Tensor<T>& gx = *grads[0];
        for (std::size_t p = 0; p < pixels; ++p) {
          for (std::size_t ch = 0; ch < count; ++ch) {
            gx[p * total + begin + ch] += gy[p * count + ch];
          }
        }
      });
}

template <std::floating_point T>
std::pair<Var<T>, Var<T>> split_channels(const Var<T>& x, std::size_t first) {
  const std::size_t c = x.shape().channels();
  if (first == 0 || first >= c) {
    throw ShapeError("split_channels: boundary " + std::to_string(first) +
                     " must lie strictly inside " + std::to_string(c) + " channels");
  }
  return {slice_channels(x, 0, first), slice_channels(x, first, c - first)};
}

template <std::floating_point T>
Var<T> channel_avg_pool(const Var<T>& x) {
  const Shape& s = x.shape();
  const std::size_t c = s.channels();
  const std::size_t pixels = s.batch() * s.height() * s.width();
  Tensor<T> out(Shape(s.batch(), s.height(), s.width(), 1));
  const auto& v = x.value();
  for (std::size_t p = 0; p < pixels; ++p) {
    T acc = 0;
    for (std::size_t ch = 0; ch < c; ++ch) acc += v[p * c + ch];
    out[p] = acc / static_cast<T>(c);
  }
  return Tape<T>::emit("channel_avg_pool", std::move(out), {x},
                       [c, pixels](const Tensor<T>& gy, std::span<Tensor<T>*> grads) {
                         Tensor<T>& gx = *grads[0];
                         const T inv = T(1) / static_cast<T>(c);
                         for (std::size_t p = 0; p < pixels; ++p) {
                           for (std::size_t ch = 0; ch < c; ++ch) gx[p * c + ch] += gy[p] * inv;
                         }
                       });
}

template <std::floating_point T>
Var<T> channel_max_pool(const Var<T>& x) {
  const Shape& s = x.shape();
  const std::size_t c = s.channels();
  const std::size_t pixels = s.batch() * s.height() * s.width();
  Tensor<T> out(Shape(s.batch(), s.height(), s.width(), 1));
  std::vector<std::size_t> argmax(pixels, 0);
  const auto& v = x.value();
  for (std::size_t p = 0; p < pixels; ++p) {
    std::size_t best = 0;
    for (std::size_t ch = 1; ch < c; ++ch) {
      if (v[p * c + ch] > v[p * c + best]) best = ch;
    }
    argmax[p] = best;
    out[p] = v[p * c + best];
  }
  if (KinkProbe::enabled()) {
    for (std::size_t a : argmax) KinkProbe::record(a);
  }
  return Tape<T>::emit("channel_max_pool", std::move(out), {x},
                       [c, argmax = std::move(argmax)](const Tensor<T>& gy,
                                                       std::span<Tensor<T>*> grads) {
                         Tensor<T>& gx = *grads[0];
                         for (std::size_t p = 0; p < argmax.size(); ++p) {
                           gx[p * c + argmax[p]] += gy[p];
                         }
                       });
}

template <std::floating_point T>
Var<T> strip_pool_h(const Var<T>& x) {
  const Shape s = x.shape();
  Tensor<T> out(Shape(s.batch(), 1, s.width(), s.channels()));
  const auto& v = x.value();
  const T inv = T(1) / static_cast<T>(s.height());
  for (std::size_t n = 0; n < s.batch(); ++n) {
    for (std::size_t j = 0; j < s.width(); ++j) {
      for (std::size_t c = 0; c < s.channels(); ++c) {
        T acc = 0;
        for (std::size_t i = 0; i < s.height(); ++i) acc += v.at(n, i, j, c);
        out.at(n, 0, j, c) = acc * inv;
      }
    }
  }
  return Tape<T>::emit("strip_pool_h", std::move(out), {x},
                       [s, inv](const Tensor<T>& gy, std::span<Tensor<T>*> grads) {
                         Tensor<T>& gx = *grads[0];
                         for (std::size_t n = 0; n < s.batch(); ++n)
                           for (std::size_t i = 0; i < s.height(); ++i)
                             for (std::size_t j = 0; j < s.width(); ++j)
                               for (std::size_t c = 0; c < s.channels(); ++c)
                                 gx.at(n, i, j, c) += gy.at(n, 0, j, c) * inv;
                       });
}

template <std::floating_point T>
Var<T> strip_pool_v(const Var<T>& x) {
  const Shape s = x.shape();
  Tensor<T> out(Shape(s.batch(), s.height(), 1, s.channels()));
  const auto& v = x.value();
  const T inv = T(1) / static_cast<T>(s.width());
  for (std::size_t n = 0; n < s.batch(); ++n) {
    for (std::size_t i = 0; i < s.height(); ++i) {
      for (std::size_t c = 0; c < s.channels(); ++c) {
        T acc = 0;
        for (std::size_t j = 0; j < s.width(); ++j) acc += v.at(n, i, j, c);
        out.at(n, i, 0, c) = acc * inv;
      }
    }
  }
  return Tape<T>::emit("strip_pool_v", std::move(out), {x},
                       [s, inv](const Tensor<T>& gy, std::span<Tensor<T>*> grads) {
                         Tensor<T>& gx = *grads[0];
                         for (std::size_t n = 0; n < s.batch(); ++n)
                           for (std::size_t i = 0; i < s.height(); ++i)
                             for (std::size_t j = 0; j < s.width(); ++j)
                               for (std::size_t c = 0; c < s.channels(); ++c)
                                 gx.at(n, i, j, c) += gy.at(n, i, 0, c) * inv;
                       });
}

template <std::floating_point T>
Var<T> expand(const Var<T>& strip, std::size_t height, std::size_t width) {
  const Shape s = strip.shape();
  if (s.height() != 1 && s.width() != 1) {
    throw ShapeError("expand: strip " + s.str() + " has no unit spatial axis");
  }
  if ((s.height() != 1 && s.height() != height) || (s.width() != 1 && s.width() != width)) {
    throw ShapeError("expand: strip " + s.str() + " does not match target " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  const bool copy_rows = s.height() == 1;
  const bool copy_cols = s.width() == 1;
  Tensor<T> out(Shape(s.batch(), height, width, s.channels()));
  const auto& v = strip.value();
  for (std::size_t n = 0; n < s.batch(); ++n)
    for (std::size_t i = 0; i < height; ++i)
      for (std::size_t j = 0; j < width; ++j)
        for (std::size_t c = 0; c < s.channels(); ++c)
          out.at(n, i, j, c) = v.at(n, copy_rows ? 0 : i, copy_cols ? 0 : j, c);
  return Tape<T>::emit("expand", std::move(out), {strip},
                       [s, height, width, copy_rows, copy_cols](
                           const Tensor<T>& gy, std::span<Tensor<T>*> grads) {
                         Tensor<T>& gs = *grads[0];
                         for (std::size_t n = 0; n < s.batch(); ++n)
                           for (std::size_t i = 0; i < height; ++i)
                             for (std::size_t j = 0; j < width; ++j)
                               for (std::size_t c = 0; c < s.channels(); ++c)
                                 gs.at(n, copy_rows ? 0 : i, copy_cols ? 0 : j, c) +=
                                     gy.at(n, i, j, c);
                       });
}

template <std::floating_point T>
Var<T> instance_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                     T eps) {
  if (!(eps > T(0))) throw ParameterError("instance_norm: eps must be > 0");
  const Shape s = x.shape();
  const std::size_t c = s.channels();
  if (gamma.value().size() != c || beta.value().size() != c) {
    throw ShapeError("instance_norm: affine parameters must have " +
                     std::to_string(c) + " entries");
  }
  const std::size_t plane = s.height() * s.width();
  const auto& v = x.value();
  const auto& gv = gamma.value();
  const auto& bv = beta.value();
  Tensor<T> out(s);
  // Normalized activations and 1/sqrt(var + eps), kept for the backward pass.
  Tensor<T> xhat(s);
  std::vector<T> inv_std(s.batch() * c);
  for (std::size_t n = 0; n < s.batch(); ++n) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      T mu = 0;
      for (std::size_t p = 0; p < plane; ++p) mu += v[(n * plane + p) * c + ch];
      mu /= static_cast<T>(plane);
      T var = 0;
      for (std::size_t p = 0; p < plane; ++p) {
        const T d = v[(n * plane + p) * c + ch] - mu;
        var += d * d;
      }
      var /= static_cast<T>(plane);
      const T is = T(1) / std::sqrt(var + eps);
      inv_std[n * c + ch] = is;
      for (std::size_t p = 0; p < plane; ++p) {
        const std::size_t k = (n * plane + p) * c + ch;
        xhat[k] = (v[k] - mu) * is;
        out[k] = gv[ch] * xhat[k] + bv[ch];
      }
    }
  }
  return Tape<T>::emit(
      "instance_norm", std::move(out), {x, gamma, beta},
      [s, plane, gamma, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          const Tensor<T>& gy, std::span<Tensor<T>*> grads) {
        const std::size_t c = s.channels();
        const auto& gv = gamma.value();
        const T inv_plane = T(1) / static_cast<T>(plane);
        for (std::size_t n = 0; n < s.batch(); ++n) {
          for (std::size_t ch = 0; ch < c; ++ch) {
            T sum_dy = 0;
            T sum_dy_xhat = 0;
            for (std::size_t p = 0; p < plane; ++p) {
              const std::size_t k = (n * plane + p) * c + ch;
              sum_dy += gy[k];
              sum_dy_xhat += gy[k] * xhat[k];
            }
            if (grads[1]) (*grads[1])[ch] += sum_dy_xhat;
            if (grads[2]) (*grads[2])[ch] += sum_dy;
            if (grads[0]) {
              const T k0 = gv[ch] * inv_std[n * c + ch];
              for (std::size_t p = 0; p < plane; ++p) {
                const std::size_t k = (n * plane + p) * c + ch;
                (*grads[0])[k] +=
                    k0 * (gy[k] - sum_dy * inv_plane - xhat[k] * sum_dy_xhat * inv_plane);
              }
            }
          }
        }
      });
}

template <std::floating_point T>
Var<T> upsample_nearest2x(const Var<T>& x) {
  const Shape s = x.shape();
  const Shape os(s.batch(), 2 * s.height(), 2 * s.width(), s.channels());
  Tensor<T> out(os);
  const auto& v = x.value();
  for (std::size_t n = 0; n < os.batch(); ++n)
    for (std::size_t i = 0; i < os.height(); ++i)
      for (std::size_t j = 0; j < os.width(); ++j)
        for (std::size_t c = 0; c < os.channels(); ++c)
          out.at(n, i, j, c) = v.at(n, i / 2, j / 2, c);
  return Tape<T>::emit("upsample_nearest2x", std::move(out), {x},
                       [os](const Tensor<T>& gy, std::span<Tensor<T>*> grads) {
                         Tensor<T>& gx = *grads[0];
                         for (std::size_t n = 0; n < os.batch(); ++n)
                           for (std::size_t i = 0; i < os.height(); ++i)
                             for (std::size_t j = 0; j < os.width(); ++j)
                               for (std::size_t c = 0; c < os.channels(); ++c)
                                 gx.at(n, i / 2, j / 2, c) += gy.at(n, i, j, c);
                       });
}

template <std::floating_point T>
Var<T> sum(const Var<T>& x) {
  T acc = 0;
  for (T v : x.value().data()) acc += v;
  return Tape<T>::emit("sum", Tensor<T>(scalar_shape(), acc), {x},
                       [](const Tensor<T>& gy, std::span<Tensor<T>*> grads) {
                         for (auto& g : grads[0]->data()) g += gy[0];
                       });
}

template <std::floating_point T>
Var<T> mean(const Var<T>& x) {
  return scale(sum(x), T(1) / static_cast<T>(x.value().size()));
}

#define TANET_INSTANTIATE_OPS(T)                                                \
  template Var<T> relu(const Var<T>&);                                          \
  template Var<T> sigmoid(const Var<T>&);                                       \
  template Var<T> add(const Var<T>&, const Var<T>&);                            \
  template Var<T> sub(const Var<T>&, const Var<T>&);                            \
  template Var<T> mul(const Var<T>&, const Var<T>&);                            \
  template Var<T> scale(const Var<T>&, T);                                      \
  template Var<T> concat_channels(const std::vector<Var<T>>&);                  \
  template Var<T> slice_channels(const Var<T>&, std::size_t, std::size_t);      \
  template std::pair<Var<T>, Var<T>> split_channels(const Var<T>&, std::size_t); \
  template Var<T> channel_avg_pool(const Var<T>&);                              \
  template Var<T> channel_max_pool(const Var<T>&);                              \
  template Var<T> strip_pool_h(const Var<T>&);                                  \
  template Var<T> strip_pool_v(const Var<T>&);                                  \
  template Var<T> expand(const Var<T>&, std::size_t, std::size_t);              \
  template Var<T> instance_norm(const Var<T>&, const Var<T>&, const Var<T>&, T); \
  template Var<T> upsample_nearest2x(const Var<T>&);                            \
  template Var<T> sum(const Var<T>&);                                           \
  template Var<T> mean(const Var<T>&);

TANET_INSTANTIATE_OPS(float)
TANET_INSTANTIATE_OPS(double)

#undef TANET_INSTANTIATE_OPS

}  // namespace tanet::ops
