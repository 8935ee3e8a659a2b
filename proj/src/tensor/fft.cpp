// SPDX-License-Identifier: Apache-2.0
#include "tanet/fft.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace tanet {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Transforms `n` complex values spaced `stride` apart.
template <typename T>
class LineTransform {
 public:
  LineTransform(std::size_t n, int sign) : n_(n), re_(n), im_(n), tw_re_(n), tw_im_(n) {
    // Twiddles computed in long double, then rounded once.
    const long double base = static_cast<long double>(sign) * 2.0L *
                             std::numbers::pi_v<long double> / static_cast<long double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      tw_re_[k] = static_cast<T>(std::cos(base * static_cast<long double>(k)));
      tw_im_[k] = static_cast<T>(std::sin(base * static_cast<long double>(k)));
    }
  }

  void run(T* re, T* im, std::size_t stride) {
    for (std::size_t k = 0; k < n_; ++k) {
      re_[k] = re[k * stride];
      im_[k] = im[k * stride];
    }
    if (is_pow2(n_)) {
      radix2();
    } else {
      direct();
    }
    for (std::size_t k = 0; k < n_; ++k) {
      re[k * stride] = re_[k];
      im[k * stride] = im_[k];
    }
  }

 private:
  void radix2() {
    for (std::size_t i = 1, j = 0; i < n_; ++i) {
      std::size_t bit = n_ >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) {
        std::swap(re_[i], re_[j]);
        std::swap(im_[i], im_[j]);
      }
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t step = n_ / len;
      const std::size_t half = len / 2;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          const T wr = tw_re_[k * step];
          const T wi = tw_im_[k * step];
          const std::size_t a = start + k;
          const std::size_t b = a + half;
          const T xr = re_[b] * wr - im_[b] * wi;
          const T xi = re_[b] * wi + im_[b] * wr;
          re_[b] = re_[a] - xr;
          im_[b] = im_[a] - xi;
          re_[a] += xr;
          im_[a] += xi;
        }
      }
    }
  }

  void direct() {
    std::vector<T> out_re(n_, T(0));
    std::vector<T> out_im(n_, T(0));
    for (std::size_t k = 0; k < n_; ++k) {
      for (std::size_t t = 0; t < n_; ++t) {
        const std::size_t idx = (k * t) % n_;
        out_re[k] += re_[t] * tw_re_[idx] - im_[t] * tw_im_[idx];
        out_im[k] += re_[t] * tw_im_[idx] + im_[t] * tw_re_[idx];
      }
    }
    re_.swap(out_re);
    im_.swap(out_im);
  }

  std::size_t n_;
  std::vector<T> re_, im_;
  std::vector<T> tw_re_, tw_im_;
};

}  // namespace

template <std::floating_point T>
void dft2d_inplace(ComplexGrid<T>& grid, int sign) {
  const Shape& s = grid.shape;
  const std::size_t h = s.height();
  const std::size_t w = s.width();
  const std::size_t c = s.channels();
  LineTransform<T> rows(w, sign);
  LineTransform<T> cols(h, sign);
  for (std::size_t n = 0; n < s.batch(); ++n) {
    const std::size_t base = n * h * w * c;
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < h; ++y) {
        const std::size_t off = base + y * w * c + ch;
        rows.run(grid.re.data() + off, grid.im.data() + off, c);
      }
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t off = base + x * c + ch;
        cols.run(grid.re.data() + off, grid.im.data() + off, w * c);
      }
    }
  }
}

template <std::floating_point T>
ComplexGrid<T> fft2d(const Tensor<T>& input) {
  ComplexGrid<T> grid(input.shape());
  grid.re.assign(input.data().begin(), input.data().end());
  dft2d_inplace(grid, -1);
  return grid;
}

template <std::floating_point T>
ComplexGrid<T> ifft2d(const ComplexGrid<T>& spectrum) {
  ComplexGrid<T> grid = spectrum;
  dft2d_inplace(grid, +1);
  const T inv = T(1) / static_cast<T>(grid.shape.height() * grid.shape.width());
  for (auto& v : grid.re) v *= inv;
  for (auto& v : grid.im) v *= inv;
  return grid;
}

template ComplexGrid<float> fft2d(const Tensor<float>&);
template ComplexGrid<double> fft2d(const Tensor<double>&);
template ComplexGrid<float> ifft2d(const ComplexGrid<float>&);
template ComplexGrid<double> ifft2d(const ComplexGrid<double>&);
template void dft2d_inplace(ComplexGrid<float>&, int);
template void dft2d_inplace(ComplexGrid<double>&, int);

}  // namespace tanet
