#pragma once

#include "scoreprior/grid.hpp"

namespace scoreprior {

namespace conv_detail {
inline void require_odd_kernel(const ImageGrid& k, const char* where) {
  if (k.height % 2 == 0 || k.width % 2 == 0)
    throw std::invalid_argument(std::string(where) + ": kernel dimensions must be odd");
}
}  // namespace conv_detail

/// "Same"-size cross-correlation with zero-padded boundary (the CNN layer
/// primitive): out(i,j) = sum_t k(t) g(i + t - center, j + t - center).
inline ImageGrid conv2_same(const ImageGrid& g, const ImageGrid& kernel) {
  conv_detail::require_odd_kernel(kernel, "conv2_same");
  const int ch = kernel.height / 2, cw = kernel.width / 2;
  ImageGrid out(g.height, g.width);
  for (int i = 0; i < g.height; ++i) {
    for (int j = 0; j < g.width; ++j) {
      double s = 0.0;
      for (int a = 0; a < kernel.height; ++a) {
        const int r = i + a - ch;
        if (r < 0 || r >= g.height) continue;
        for (int b = 0; b < kernel.width; ++b) {
          const int c = j + b - cw;
          if (c < 0 || c >= g.width) continue;
          s += kernel.at(a, b) * g.at(r, c);
        }
      }
      out.at(i, j) = s;
    }
  }
  return out;
}

/// Adjoint of conv2_same with the same kernel: correlation with the kernel
/// flipped in both axes, satisfying <conv2_same(g,k), h> == <g, conv2_same_adjoint(h,k)>.
inline ImageGrid conv2_same_adjoint(const ImageGrid& h, const ImageGrid& kernel) {
  conv_detail::require_odd_kernel(kernel, "conv2_same_adjoint");
  ImageGrid flipped(kernel.height, kernel.width);
  for (int a = 0; a < kernel.height; ++a)
    for (int b = 0; b < kernel.width; ++b)
      flipped.at(a, b) = kernel.at(kernel.height - 1 - a, kernel.width - 1 - b);
  return conv2_same(h, flipped);
}

/// Periodic-boundary convolution (kernel flipped relative to conv2_same), so
/// it matches the DFT-domain pointwise product exactly.
inline ImageGrid conv2_circular(const ImageGrid& g, const ImageGrid& kernel) {
  conv_detail::require_odd_kernel(kernel, "conv2_circular");
  const int ch = kernel.height / 2, cw = kernel.width / 2;
  ImageGrid out(g.height, g.width);
  for (int i = 0; i < g.height; ++i) {
    for (int j = 0; j < g.width; ++j) {
      double s = 0.0;
      for (int a = 0; a < kernel.height; ++a) {
        int r = i - (a - ch);
        r %= g.height;
        if (r < 0) r += g.height;
        for (int b = 0; b < kernel.width; ++b) {
          int c = j - (b - cw);
          c %= g.width;
          if (c < 0) c += g.width;
          s += kernel.at(a, b) * g.at(r, c);
        }
      }
      out.at(i, j) = s;
    }
  }
  return out;
}

/// k x k box-averaging kernel (entries 1/k^2).
inline ImageGrid box_kernel(int k) {
  if (k <= 0 || k % 2 == 0) throw ConfigError("box_kernel: size must be odd and positive");
  return ImageGrid(k, k, 1.0 / (static_cast<double>(k) * k));
}

}  // namespace scoreprior
