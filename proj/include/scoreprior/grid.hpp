#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "scoreprior/errors.hpp"

namespace scoreprior {

/// Dense H x W raster of real samples, row-major. The universal signal type:
/// images, measurements, masks, gradients and iterates are all ImageGrids.
struct ImageGrid {
  int height = 0;
  int width = 0;
  std::vector<double> data;  // height * width, row-major

  ImageGrid() = default;
  ImageGrid(int h, int w, double fill = 0.0) : height(h), width(w) {
    if (h <= 0 || w <= 0) throw ConfigError("ImageGrid dimensions must be positive");
    data.assign(static_cast<std::size_t>(h) * w, fill);
  }

  std::size_t size() const { return data.size(); }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
  const double& at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
  double& operator[](std::size_t i) { return data[i]; }
  const double& operator[](std::size_t i) const { return data[i]; }

  bool same_shape(const ImageGrid& o) const { return height == o.height && width == o.width; }
};

/// Dense H x W raster of complex samples, row-major. Used for spectra.
struct ComplexGrid {
  int height = 0;
  int width = 0;
  std::vector<std::complex<double>> data;

  ComplexGrid() = default;
  ComplexGrid(int h, int w, std::complex<double> fill = {0.0, 0.0}) : height(h), width(w) {
    if (h <= 0 || w <= 0) throw ConfigError("ComplexGrid dimensions must be positive");
    data.assign(static_cast<std::size_t>(h) * w, fill);
  }

  std::size_t size() const { return data.size(); }
  std::complex<double>& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
  const std::complex<double>& at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * width + c];
  }
  std::complex<double>& operator[](std::size_t i) { return data[i]; }
  const std::complex<double>& operator[](std::size_t i) const { return data[i]; }

  bool same_shape(const ComplexGrid& o) const { return height == o.height && width == o.width; }
};

inline void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* where) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(where) + ": shape mismatch (" +
                                std::to_string(a.height) + "x" + std::to_string(a.width) + " vs " +
                                std::to_string(b.height) + "x" + std::to_string(b.width) + ")");
}

inline bool is_finite(const ImageGrid& g) {
  for (double v : g.data)
    if (!std::isfinite(v)) return false;
  return true;
}

inline bool is_finite(const ComplexGrid& g) {
  for (const auto& v : g.data)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

inline double dot(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(const ImageGrid& g) {
  double s = 0.0;
  for (double v : g.data) s += v * v;
  return s;
}

inline double squared_norm(const ComplexGrid& g) {
  double s = 0.0;
  for (const auto& v : g.data) s += std::norm(v);
  return s;
}

inline double max_abs(const ImageGrid& g) {
  double m = 0.0;
  for (double v : g.data) m = std::max(m, std::abs(v));
  return m;
}

/// a += scale * b
inline void add_scaled(ImageGrid& a, const ImageGrid& b, double scale) {
  require_same_shape(a, b, "add_scaled");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += scale * b[i];
}

inline ImageGrid operator-(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "operator-");
  ImageGrid out(a.height, a.width);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline ImageGrid operator+(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "operator+");
  ImageGrid out(a.height, a.width);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

}  // namespace scoreprior
