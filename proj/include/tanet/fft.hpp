// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "tanet/tensor.hpp"

namespace tanet {

/// Complex spectrum laid out like the Tensor it came from: one H x W plane
/// per (sample, channel), NHWC order.
template <std::floating_point T>
struct ComplexGrid {
  Shape shape;
  std::vector<T> re;
  std::vector<T> im;

  ComplexGrid() = default;
  explicit ComplexGrid(Shape s) : shape(s), re(s.size(), T(0)), im(s.size(), T(0)) {}
};

/// Unnormalized forward DFT over the H x W plane of every sample/channel:
/// X[u, v] = sum_{y, x} f[y, x] exp(-2 pi i (u y / H + v x / W)).
/// Radix-2 for power-of-two extents, direct summation otherwise.
template <std::floating_point T>
ComplexGrid<T> fft2d(const Tensor<T>& input);

/// Inverse of fft2d, including the 1 / (H W) factor.
template <std::floating_point T>
ComplexGrid<T> ifft2d(const ComplexGrid<T>& spectrum);

/// In-place 2-D transform of a complex grid. `sign` is -1 for the forward
/// kernel and +1 for the conjugate kernel; no normalization is applied.
template <std::floating_point T>
void dft2d_inplace(ComplexGrid<T>& grid, int sign);

}  // namespace tanet
