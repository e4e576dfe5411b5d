#pragma once

#include <complex>
#include <variant>

#include "scoreprior/fft.hpp"
#include "scoreprior/grid.hpp"
#include "scoreprior/rng.hpp"

namespace scoreprior {

/// Linear masking operator: 1 = observed, 0 = removed. Measurements live as
/// full grids with unobserved pixels zeroed, so A = A^T = diag(mask).
struct InpaintingOp {
  ImageGrid mask;

  void validate() const {
    bool any_observed = false;
    for (double v : mask.data) {
      if (v != 0.0 && v != 1.0) throw ConfigError("inpainting: mask must be binary");
      if (v == 1.0) any_observed = true;
    }
    if (!any_observed) throw ConfigError("inpainting: mask must observe at least one pixel");
  }

  static InpaintingOp from_rect(int height, int width, int top, int left, int rect_h, int rect_w) {
    if (top < 0 || left < 0 || rect_h < 0 || rect_w < 0 || top + rect_h > height ||
        left + rect_w > width)
      throw ConfigError("inpainting: crop rectangle out of bounds");
    InpaintingOp op;
    op.mask = ImageGrid(height, width, 1.0);
    for (int i = top; i < top + rect_h; ++i)
      for (int j = left; j < left + rect_w; ++j) op.mask.at(i, j) = 0.0;
    op.validate();
    return op;
  }

  static InpaintingOp center_crop(int height, int width, int crop_h, int crop_w) {
    return from_rect(height, width, (height - crop_h) / 2, (width - crop_w) / 2, crop_h, crop_w);
  }
};

inline ImageGrid inpaint_apply(const InpaintingOp& op, const ImageGrid& x) {
  require_same_shape(op.mask, x, "inpaint_apply");
  ImageGrid y(x.height, x.width);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = op.mask[i] * x[i];
  return y;
}

inline ImageGrid inpaint_adjoint(const InpaintingOp& op, const ImageGrid& y) {
  // the embedded representation makes A self-adjoint
  return inpaint_apply(op, y);
}

/// Phase-only spectrum operator A(x) = Re(idft2(dft2(x) / max(|dft2(x)|, eps))).
struct MagnitudeRetrievalOp {
  double epsilon = 1e-12;

  void validate() const {
    if (epsilon <= 0.0) throw ConfigError("magnitude: epsilon must be > 0");
  }
};

inline ImageGrid magnitude_apply(const MagnitudeRetrievalOp& op, const ImageGrid& x) {
  op.validate();
  ComplexGrid u = dft2(x);
  for (auto& v : u.data) {
    const double mag = std::max(std::abs(v), op.epsilon);
    v /= mag;
  }
  return idft2_real(u);
}

/// Forward operator plus Gaussian measurement noise variance eta^2.
struct MeasurementModel {
  std::variant<InpaintingOp, MagnitudeRetrievalOp> op;
  double noise_variance = 0.0;  // eta^2

  bool is_linear() const { return std::holds_alternative<InpaintingOp>(op); }
  const InpaintingOp& inpainting() const { return std::get<InpaintingOp>(op); }
  const MagnitudeRetrievalOp& magnitude() const { return std::get<MagnitudeRetrievalOp>(op); }
};

inline ImageGrid apply_operator(const MeasurementModel& model, const ImageGrid& x) {
  if (model.is_linear()) return inpaint_apply(model.inpainting(), x);
  return magnitude_apply(model.magnitude(), x);
}

/// Gradient of log f_{Y|X}(y|x) for the linear model:
/// -(1/eta^2) (A^T A x - A^T y), an ascent direction on the log-likelihood.
inline ImageGrid loglik_grad_linear(const MeasurementModel& model, const ImageGrid& x,
                                    const ImageGrid& y) {
  if (model.noise_variance <= 0.0) throw ConfigError("loglik_grad: eta^2 must be > 0");
  const InpaintingOp& op = model.inpainting();
  require_same_shape(x, y, "loglik_grad_linear");
  require_same_shape(op.mask, x, "loglik_grad_linear");
  const double inv = 1.0 / model.noise_variance;
  ImageGrid g(x.height, x.width);
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = inv * op.mask[i] * (y[i] - x[i]);
  return g;
}

/// Gradient of log f_{Y|X}(y|x) = -(1/2 eta^2) ||A(x) - y||^2 for the
/// magnitude-retrieval operator, derived by hand: with u = dft2(x) and
/// s = dft2(A(x) - y), the Jacobian of u -> u/|u| is self-adjoint per
/// coefficient, (I - uu*/|u|^2)/|u| as a real-linear map, so
///   grad = -(1/eta^2) Re(idft2(w)),  w_k = s_k/|u_k| - u_k Re(conj(u_k) s_k)/|u_k|^3,
/// and w_k = s_k/eps on coefficients floored by |u_k| < eps (there the
/// operator is linear: u/eps).
inline ImageGrid loglik_grad_magnitude(const MeasurementModel& model, const ImageGrid& x,
                                       const ImageGrid& y) {
  if (model.noise_variance <= 0.0) throw ConfigError("loglik_grad: eta^2 must be > 0");
  const MagnitudeRetrievalOp& op = model.magnitude();
  op.validate();
  require_same_shape(x, y, "loglik_grad_magnitude");

  ComplexGrid u = dft2(x);
  ComplexGrid phase(u.height, u.width);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double mag = std::max(std::abs(u[i]), op.epsilon);
    phase[i] = u[i] / mag;
  }
  const ImageGrid residual = idft2_real(phase) - y;
  const ComplexGrid s = dft2(residual);

  ComplexGrid w(u.height, u.width);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double mag = std::abs(u[i]);
    if (mag < op.epsilon) {
      w[i] = s[i] / op.epsilon;
    } else {
      const double radial = u[i].real() * s[i].real() + u[i].imag() * s[i].imag();
      w[i] = s[i] / mag - u[i] * (radial / (mag * mag * mag));
    }
  }
  ImageGrid grad = idft2_real(w);
  const double scale = -1.0 / model.noise_variance;
  for (double& v : grad.data) v *= scale;
  return grad;
}

inline ImageGrid loglik_grad(const MeasurementModel& model, const ImageGrid& x,
                             const ImageGrid& y) {
  return model.is_linear() ? loglik_grad_linear(model, x, y)
                           : loglik_grad_magnitude(model, x, y);
}

/// y = A(x) + N(0, eta^2 I). For the linear model the noise is restricted to
/// observed pixels (the measurement lives there). Variance 0 is allowed as a
/// noiseless test path.
inline ImageGrid simulate_measurement(const MeasurementModel& model, const ImageGrid& x,
                                      RngStream& rng) {
  if (model.noise_variance < 0.0) throw ConfigError("simulate_measurement: eta^2 must be >= 0");
  ImageGrid y = apply_operator(model, x);
  if (model.noise_variance == 0.0) return y;
  const double sd = std::sqrt(model.noise_variance);
  if (model.is_linear()) {
    const ImageGrid& mask = model.inpainting().mask;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += mask[i] * sd * rng.next_gaussian();
  } else {
    for (double& v : y.data) v += sd * rng.next_gaussian();
  }
  return y;
}

}  // namespace scoreprior
