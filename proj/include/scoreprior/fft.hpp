#pragma once

#include <complex>
#include <numbers>
#include <vector>

#include "scoreprior/grid.hpp"

namespace scoreprior {
namespace fft_detail {

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// In-place iterative radix-2 transform. sign = -1 forward, +1 inverse.
/// No normalization.
inline void fft_pow2(std::vector<cplx>& a, int sign) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  // bit reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const cplx u = a[i + j];
        const cplx v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

/// Arbitrary-length transform via Bluestein's chirp-z algorithm.
inline void fft_bluestein(std::vector<cplx>& a, int sign) {
  const std::size_t n = a.size();
  const std::size_t m = next_pow2(2 * n - 1);
  // chirp[j] = exp(sign * i * pi * j^2 / n), with j^2 taken mod 2n to keep
  // the phase argument small.
  std::vector<cplx> chirp(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t j2 = (j * j) % (2 * n);
    const double ang = sign * std::numbers::pi * static_cast<double>(j2) / static_cast<double>(n);
    chirp[j] = cplx(std::cos(ang), std::sin(ang));
  }
  std::vector<cplx> x(m, cplx(0.0, 0.0)), y(m, cplx(0.0, 0.0));
  for (std::size_t j = 0; j < n; ++j) x[j] = a[j] * chirp[j];
  y[0] = std::conj(chirp[0]);
  for (std::size_t j = 1; j < n; ++j) y[j] = y[m - j] = std::conj(chirp[j]);
  fft_pow2(x, -1);
  fft_pow2(y, -1);
  for (std::size_t j = 0; j < m; ++j) x[j] *= y[j];
  fft_pow2(x, +1);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t j = 0; j < n; ++j) a[j] = x[j] * inv_m * chirp[j];
}

inline void fft_any(std::vector<cplx>& a, int sign) {
  if (is_pow2(a.size()))
    fft_pow2(a, sign);
  else
    fft_bluestein(a, sign);
}

/// Unnormalized 2-D transform over rows then columns of g, in place.
inline void transform2(ComplexGrid& g, int sign) {
  const int h = g.height, w = g.width;
  std::vector<cplx> buf(static_cast<std::size_t>(std::max(h, w)));
  for (int r = 0; r < h; ++r) {
    buf.assign(g.data.begin() + static_cast<std::size_t>(r) * w,
               g.data.begin() + static_cast<std::size_t>(r + 1) * w);
    fft_any(buf, sign);
    std::copy(buf.begin(), buf.end(), g.data.begin() + static_cast<std::size_t>(r) * w);
  }
  buf.resize(static_cast<std::size_t>(h));
  for (int c = 0; c < w; ++c) {
    for (int r = 0; r < h; ++r) buf[static_cast<std::size_t>(r)] = g.at(r, c);
    fft_any(buf, sign);
    for (int r = 0; r < h; ++r) g.at(r, c) = buf[static_cast<std::size_t>(r)];
  }
}

}  // namespace fft_detail

/// Unitary 2-D DFT: idft2(dft2(g)) == g and Parseval holds with equality.
inline ComplexGrid dft2(const ComplexGrid& g) {
  ComplexGrid out = g;
  fft_detail::transform2(out, -1);
  const double scale = 1.0 / std::sqrt(static_cast<double>(g.size()));
  for (auto& v : out.data) v *= scale;
  return out;
}

inline ComplexGrid dft2(const ImageGrid& g) {
  ComplexGrid c(g.height, g.width);
  for (std::size_t i = 0; i < g.size(); ++i) c[i] = {g[i], 0.0};
  return dft2(c);
}

inline ComplexGrid idft2(const ComplexGrid& G) {
  ComplexGrid out = G;
  fft_detail::transform2(out, +1);
  const double scale = 1.0 / std::sqrt(static_cast<double>(G.size()));
  for (auto& v : out.data) v *= scale;
  return out;
}

/// Real part of the inverse transform, for spectra known to be conjugate
/// symmetric up to roundoff.
inline ImageGrid idft2_real(const ComplexGrid& G) {
  ComplexGrid c = idft2(G);
  ImageGrid out(G.height, G.width);
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

}  // namespace scoreprior
