// SPDX-License-Identifier: Apache-2.0
// Convolution via im2col + GEMM. NHWC activations and (kh, kw, c_in, c_out)
// kernels are both row-major, so the column matrix times the kernel viewed
// as a (kh*kw*c_in, c_out) matrix is directly the NHWC output.
#include <Eigen/Core>
#include <algorithm>
#include <cstring>

#include "tanet/ops.hpp"

namespace tanet::ops {

std::size_t conv_output_dim(std::size_t in, std::size_t kernel,
                            std::size_t pad, std::size_t stride) {
  if (stride == 0) throw ShapeError("conv2d: stride must be >= 1");
  const auto span = static_cast<long long>(in + 2 * pad) -
                    static_cast<long long>(kernel);
  if (span < 0) {
    throw ShapeError("conv2d: kernel " + std::to_string(kernel) +
                     " larger than padded input " + std::to_string(in + 2 * pad));
  }
  return static_cast<std::size_t>(span) / stride + 1;
}

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ConvGeometry {
  std::size_t n, h, w, cin;
  std::size_t kh, kw, cout;
  std::size_t oh, ow;
  std::size_t stride, pad_h, pad_w;

  std::size_t rows() const { return n * oh * ow; }
  std::size_t depth() const { return kh * kw * cin; }
  bool is_pointwise() const {
    return kh == 1 && kw == 1 && stride == 1 && pad_h == 0 && pad_w == 0;
  }
};

ConvGeometry geometry(const Shape& x, const Shape& w, const Shape& b,
                      const Conv2dOptions& opt) {
  if (x.channels() != w[2]) {
    throw ShapeError("conv2d: input has " + std::to_string(x.channels()) +
                     " channels, kernel expects " + std::to_string(w[2]));
  }
  if (b.size() != w[3]) {
    throw ShapeError("conv2d: bias length " + std::to_string(b.size()) +
                     " != output channels " + std::to_string(w[3]));
  }
  ConvGeometry g{x.batch(), x.height(), x.width(), x.channels(),
                 w[0],      w[1],       w[3],      0,
                 0,         opt.stride, opt.pad_h, opt.pad_w};
  g.oh = conv_output_dim(g.h, g.kh, g.pad_h, g.stride);
  g.ow = conv_output_dim(g.w, g.kw, g.pad_w, g.stride);
  return g;
}

// Column rows [row_begin, row_end) of the im2col matrix; row r is output
// position (n, oy, ox) flattened.
template <typename T>
void im2col_rows(const T* x, const ConvGeometry& g, std::size_t row_begin,
                 std::size_t row_end, T* col) {
  const std::size_t depth = g.depth();
  for (std::size_t r = row_begin; r < row_end; ++r) {
    const std::size_t ox = r % g.ow;
    const std::size_t oy = (r / g.ow) % g.oh;
    const std::size_t n = r / (g.ow * g.oh);
    T* row = col + (r - row_begin) * depth;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      const long long iy = static_cast<long long>(oy * g.stride + ky) -
                           static_cast<long long>(g.pad_h);
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const long long ix = static_cast<long long>(ox * g.stride + kx) -
                             static_cast<long long>(g.pad_w);
        T* dst = row + (ky * g.kw + kx) * g.cin;
        if (iy < 0 || ix < 0 || iy >= static_cast<long long>(g.h) ||
            ix >= static_cast<long long>(g.w)) {
          std::memset(dst, 0, g.cin * sizeof(T));
        } else {
          const T* src = x + ((n * g.h + static_cast<std::size_t>(iy)) * g.w +
                              static_cast<std::size_t>(ix)) *
                                 g.cin;
          std::memcpy(dst, src, g.cin * sizeof(T));
        }
      }
    }
  }
}

template <typename T>
void col2im_rows_add(const T* col, const ConvGeometry& g, std::size_t row_begin,
                     std::size_t row_end, T* dx) {
  const std::size_t depth = g.depth();
  for (std::size_t r = row_begin; r < row_end; ++r) {
    const std::size_t ox = r % g.ow;
    const std::size_t oy = (r / g.ow) % g.oh;
    const std::size_t n = r / (g.ow * g.oh);
    const T* row = col + (r - row_begin) * depth;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      const long long iy = static_cast<long long>(oy * g.stride + ky) -
                           static_cast<long long>(g.pad_h);
      if (iy < 0 || iy >= static_cast<long long>(g.h)) continue;
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const long long ix = static_cast<long long>(ox * g.stride + kx) -
                             static_cast<long long>(g.pad_w);
        if (ix < 0 || ix >= static_cast<long long>(g.w)) continue;
        const T* src = row + (ky * g.kw + kx) * g.cin;
        T* dst = dx + ((n * g.h + static_cast<std::size_t>(iy)) * g.w +
                       static_cast<std::size_t>(ix)) *
                          g.cin;
        for (std::size_t c = 0; c < g.cin; ++c) dst[c] += src[c];
      }
    }
  }
}

// Rows per im2col block, sized so one block of columns stays cache resident.
std::size_t chunk_rows(const ConvGeometry& g) {
  constexpr std::size_t kTargetElements = std::size_t{1} << 16;
  return std::max<std::size_t>(64, kTargetElements / g.depth());
}

}  // namespace

template <std::floating_point T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias,
              Conv2dOptions opt) {
  const ConvGeometry g = geometry(input.shape(), weight.shape(), bias.shape(), opt);
  const auto rows = static_cast<Eigen::Index>(g.rows());
  const auto depth = static_cast<Eigen::Index>(g.depth());
  const auto cout = static_cast<Eigen::Index>(g.cout);

  Tensor<T> out(Shape(g.n, g.oh, g.ow, g.cout));
  {
    Eigen::Map<const RowMat<T>> w(weight.value().raw(), depth, cout);
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.value().raw(), cout);
    if (g.is_pointwise()) {
      Eigen::Map<const RowMat<T>> col(input.value().raw(), rows, depth);
      Eigen::Map<RowMat<T>> y(out.raw(), rows, cout);
      y.noalias() = col * w;
      y.rowwise() += b;
    } else {
      const std::size_t step = chunk_rows(g);
      AlignedVector<T> scratch(std::min(step, g.rows()) * g.depth());
      for (std::size_t r0 = 0; r0 < g.rows(); r0 += step) {
        const std::size_t r1 = std::min(r0 + step, g.rows());
        const auto n = static_cast<Eigen::Index>(r1 - r0);
        im2col_rows(input.value().raw(), g, r0, r1, scratch.data());
        Eigen::Map<const RowMat<T>> col(scratch.data(), n, depth);
        Eigen::Map<RowMat<T>> y(out.raw() + r0 * g.cout, n, cout);
        y.noalias() = col * w;
        y.rowwise() += b;
      }
    }
  }

  return Tape<T>::emit(
      "conv2d", std::move(out), {input, weight, bias},
      [input, weight, g](const Tensor<T>& gy, std::span<Tensor<T>*> grads) {
        const auto rows = static_cast<Eigen::Index>(g.rows());
        const auto depth = static_cast<Eigen::Index>(g.depth());
        const auto cout = static_cast<Eigen::Index>(g.cout);
        Eigen::Map<const RowMat<T>> dy(gy.raw(), rows, cout);
        Eigen::Map<const RowMat<T>> w(weight.value().raw(), depth, cout);

        if (grads[2]) {
          Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(grads[2]->raw(), cout);
          db += dy.colwise().sum();
        }
        if (g.is_pointwise()) {
          Eigen::Map<const RowMat<T>> col(input.value().raw(), rows, depth);
          if (grads[1]) {
            Eigen::Map<RowMat<T>> dw(grads[1]->raw(), depth, cout);
            dw.noalias() += col.transpose() * dy;
          }
          if (grads[0]) {
            Eigen::Map<RowMat<T>> dx(grads[0]->raw(), rows, depth);
            dx.noalias() += dy * w.transpose();
          }
          return;
        }
        const std::size_t step = chunk_rows(g);
        AlignedVector<T> scratch(std::min(step, g.rows()) * g.depth());
        for (std::size_t r0 = 0; r0 < g.rows(); r0 += step) {
          const std::size_t r1 = std::min(r0 + step, g.rows());
          const auto n = static_cast<Eigen::Index>(r1 - r0);
          Eigen::Map<const RowMat<T>> dy_block(gy.raw() + r0 * g.cout, n, cout);
          if (grads[1]) {
            im2col_rows(input.value().raw(), g, r0, r1, scratch.data());
            Eigen::Map<const RowMat<T>> col(scratch.data(), n, depth);
            Eigen::Map<RowMat<T>> dw(grads[1]->raw(), depth, cout);
            dw.noalias() += col.transpose() * dy_block;
          }
          if (grads[0]) {
            Eigen::Map<RowMat<T>> dcol(scratch.data(), n, depth);
            dcol.noalias() = dy_block * w.transpose();
            col2im_rows_add(scratch.data(), g, r0, r1, grads[0]->raw());
          }
        }
      });
}

template Var<float> conv2d(const Var<float>&, const Var<float>&, const Var<float>&,
                           Conv2dOptions);
template Var<double> conv2d(const Var<double>&, const Var<double>&,
                            const Var<double>&, Conv2dOptions);

}  // namespace tanet::ops
