#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "scoreprior/forward_models.hpp"
#include "scoreprior/grid.hpp"

namespace scoreprior {

inline double mse(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

/// 10 log10(peak^2 / MSE) in dB; +inf when the grids match exactly.
inline double psnr(const ImageGrid& reference, const ImageGrid& estimate, double peak = 1.0) {
  if (peak <= 0.0) throw ConfigError("psnr: peak must be > 0");
  const double m = mse(reference, estimate);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / m);
}

/// PSNR of A(reconstruction) against the measurement y. For inpainting the
/// mean square error runs over observed pixels only; unobserved pixels carry
/// no measurement.
inline double data_fidelity(const MeasurementModel& model, const ImageGrid& reconstruction,
                            const ImageGrid& y, double peak = 1.0) {
  const ImageGrid predicted = apply_operator(model, reconstruction);
  require_same_shape(predicted, y, "data_fidelity");
  if (model.is_linear()) {
    const ImageGrid& mask = model.inpainting().mask;
    double s = 0.0, n = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (mask[i] == 0.0) continue;
      const double d = predicted[i] - y[i];
      s += d * d;
      n += 1.0;
    }
    const double m = s / n;
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / m);
  }
  return psnr(y, predicted, peak);
}

struct MetricRecord {
  std::string run_id;
  std::string image_id;
  std::string name;
  double value = 0.0;
  std::string units;  // "dB" or "intensity^2"
};

inline std::string metric_value_string(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

/// CSV with header row: run_id,image_id,metric,value,units. Infinite PSNR is
/// serialized as "inf".
inline void write_metrics_csv(const std::vector<MetricRecord>& records, std::ostream& out) {
  out << "run_id,image_id,metric,value,units\n";
  for (const auto& r : records)
    out << r.run_id << ',' << r.image_id << ',' << r.name << ',' << metric_value_string(r.value)
        << ',' << r.units << '\n';
}

}  // namespace scoreprior
