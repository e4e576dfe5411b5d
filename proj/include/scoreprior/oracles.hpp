#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "scoreprior/grid.hpp"

namespace scoreprior {

namespace oracle_detail {
inline Eigen::VectorXd to_vector(const ImageGrid& g) {
  return Eigen::Map<const Eigen::VectorXd>(g.data.data(), static_cast<Eigen::Index>(g.size()));
}
inline ImageGrid from_vector(const Eigen::VectorXd& v, int height, int width) {
  ImageGrid g(height, width);
  Eigen::Map<Eigen::VectorXd>(g.data.data(), v.size()) = v;
  return g;
}
}  // namespace oracle_detail

/// Exact Gaussian prior X ~ N(mean, Sigma), used as a closed-form MMSE
/// denoiser to verify the score/Tweedie/Langevin machinery. Sigma is either
/// isotropic (s^2 I) or an explicit dense matrix over flattened pixels.
struct GaussianPriorOracle {
  ImageGrid mean;
  std::optional<double> isotropic_variance;
  std::optional<Eigen::MatrixXd> covariance;

  static GaussianPriorOracle isotropic(ImageGrid mean, double variance) {
    if (variance < 0.0) throw ConfigError("GaussianPriorOracle: variance must be >= 0");
    GaussianPriorOracle o;
    o.mean = std::move(mean);
    o.isotropic_variance = variance;
    return o;
  }

  static GaussianPriorOracle dense(ImageGrid mean, Eigen::MatrixXd cov) {
    const auto n = static_cast<Eigen::Index>(mean.size());
    if (cov.rows() != n || cov.cols() != n)
      throw ConfigError("GaussianPriorOracle: covariance must be N x N for N pixels");
    if (!cov.isApprox(cov.transpose(), 1e-12))
      throw ConfigError("GaussianPriorOracle: covariance must be symmetric");
    GaussianPriorOracle o;
    o.mean = std::move(mean);
    o.covariance = std::move(cov);
    return o;
  }
};

/// MMSE denoiser for Z = X + N(0, sigma2 I):  mean + Sigma (Sigma + sigma2 I)^-1 (z - mean).
inline ImageGrid gaussian_oracle_denoise(const GaussianPriorOracle& oracle, const ImageGrid& z,
                                         double sigma2) {
  if (sigma2 <= 0.0) throw ConfigError("gaussian_oracle_denoise: sigma2 must be > 0");
  require_same_shape(oracle.mean, z, "gaussian_oracle_denoise");
  if (oracle.isotropic_variance) {
    const double s2 = *oracle.isotropic_variance;
    const double shrink = s2 / (s2 + sigma2);
    ImageGrid out(z.height, z.width);
    for (std::size_t i = 0; i < z.size(); ++i)
      out[i] = oracle.mean[i] + shrink * (z[i] - oracle.mean[i]);
    return out;
  }
  const Eigen::VectorXd centered = oracle_detail::to_vector(z) - oracle_detail::to_vector(oracle.mean);
  Eigen::MatrixXd regularized = *oracle.covariance;
  regularized.diagonal().array() += sigma2;
  const Eigen::VectorXd solved = regularized.llt().solve(centered);
  const Eigen::VectorXd xhat = oracle_detail::to_vector(oracle.mean) + *oracle.covariance * solved;
  return oracle_detail::from_vector(xhat, z.height, z.width);
}

/// Closed-form score of the noisy density f_Z = N(mean, Sigma + sigma2 I):
/// -(Sigma + sigma2 I)^-1 (z - mean). Reference route, independent of Tweedie.
inline ImageGrid gaussian_oracle_score(const GaussianPriorOracle& oracle, const ImageGrid& z,
                                       double sigma2) {
  if (sigma2 <= 0.0) throw ConfigError("gaussian_oracle_score: sigma2 must be > 0");
  require_same_shape(oracle.mean, z, "gaussian_oracle_score");
  if (oracle.isotropic_variance) {
    const double inv = -1.0 / (*oracle.isotropic_variance + sigma2);
    ImageGrid out(z.height, z.width);
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = inv * (z[i] - oracle.mean[i]);
    return out;
  }
  const Eigen::VectorXd centered = oracle_detail::to_vector(z) - oracle_detail::to_vector(oracle.mean);
  Eigen::MatrixXd regularized = *oracle.covariance;
  regularized.diagonal().array() += sigma2;
  const Eigen::VectorXd solved = regularized.llt().solve(centered);
  return oracle_detail::from_vector(-solved, z.height, z.width);
}

struct GmmComponent {
  double weight;
  ImageGrid mean;
  double variance;  // isotropic
};

/// Mixture of isotropic Gaussians over grid space; its posterior mean under
/// additive noise is the responsibility-weighted sum of per-component
/// shrinkage estimates, giving a multimodal exact MMSE denoiser.
struct GmmPriorOracle {
  std::vector<GmmComponent> components;

  void validate() const {
    if (components.empty()) throw ConfigError("GmmPriorOracle: needs at least one component");
    double total = 0.0;
    for (const auto& c : components) {
      if (c.weight <= 0.0) throw ConfigError("GmmPriorOracle: weights must be positive");
      if (c.variance <= 0.0) throw ConfigError("GmmPriorOracle: variances must be positive");
      if (!c.mean.same_shape(components.front().mean))
        throw ConfigError("GmmPriorOracle: component means must share one shape");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("GmmPriorOracle: weights must sum to 1");
  }
};

namespace oracle_detail {
/// Log responsibilities log w_k(z), computed in log space with a
/// log-sum-exp guard; also usable for the mixture score.
inline std::vector<double> gmm_log_responsibilities(const GmmPriorOracle& oracle,
                                                    const ImageGrid& z, double sigma2) {
  const std::size_t n = z.size();
  std::vector<double> logw(oracle.components.size());
  for (std::size_t k = 0; k < oracle.components.size(); ++k) {
    const auto& comp = oracle.components[k];
    const double var = comp.variance + sigma2;
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = z[i] - comp.mean[i];
      sq += d * d;
    }
    logw[k] = std::log(comp.weight) -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi * var) -
              0.5 * sq / var;
  }
  double peak = logw[0];
  for (double v : logw) peak = std::max(peak, v);
  double denom = 0.0;
  for (double v : logw) denom += std::exp(v - peak);
  const double log_denom = peak + std::log(denom);
  for (double& v : logw) v -= log_denom;
  return logw;
}
}  // namespace oracle_detail

inline ImageGrid gmm_oracle_denoise(const GmmPriorOracle& oracle, const ImageGrid& z,
                                    double sigma2) {
  if (sigma2 <= 0.0) throw ConfigError("gmm_oracle_denoise: sigma2 must be > 0");
  oracle.validate();
  require_same_shape(oracle.components.front().mean, z, "gmm_oracle_denoise");
  const auto logw = oracle_detail::gmm_log_responsibilities(oracle, z, sigma2);
  ImageGrid out(z.height, z.width, 0.0);
  for (std::size_t k = 0; k < oracle.components.size(); ++k) {
    const auto& comp = oracle.components[k];
    const double w = std::exp(logw[k]);
    const double shrink = comp.variance / (comp.variance + sigma2);
    for (std::size_t i = 0; i < z.size(); ++i)
      out[i] += w * (comp.mean[i] + shrink * (z[i] - comp.mean[i]));
  }
  return out;
}

}  // namespace scoreprior
