#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <vector>

#include "scoreprior/grid.hpp"
#include "scoreprior/parallel.hpp"
#include "scoreprior/rng.hpp"

namespace scoreprior {

/// Fully-convolutional residual denoiser r(z) = z + CNN(z). Hidden layers are
/// conv -> bias -> ReLU; the final layer is a linear conv producing one
/// channel. With input_skip, the raw input is concatenated as an extra channel
/// into every hidden layer's input.
struct CnnArchitecture {
  int depth = 10;        // total conv layers, >= 2
  int channels = 32;     // hidden width
  int kernel_size = 3;   // odd
  bool input_skip = true;

  void validate() const {
    if (depth < 2) throw ConfigError("cnn: depth must be >= 2");
    if (channels < 1) throw ConfigError("cnn: channels must be >= 1");
    if (kernel_size < 1 || kernel_size % 2 == 0)
      throw ConfigError("cnn: kernel_size must be odd and positive");
  }

  int layer_in_channels(int layer) const {
    const int base = layer == 0 ? 1 : channels;
    const bool hidden = layer < depth - 1;
    return base + (hidden && input_skip ? 1 : 0);
  }
  int layer_out_channels(int layer) const { return layer < depth - 1 ? channels : 1; }
};

struct CnnLayer {
  Eigen::MatrixXd weight;  // (in_channels * k * k, out_channels)
  Eigen::VectorXd bias;    // (out_channels)
};

struct CnnDenoiserParams {
  CnnArchitecture arch;
  std::vector<CnnLayer> layers;

  void validate() const {
    arch.validate();
    if (static_cast<int>(layers.size()) != arch.depth)
      throw ConfigError("cnn: layer count does not match depth");
    const int kk = arch.kernel_size * arch.kernel_size;
    for (int l = 0; l < arch.depth; ++l) {
      const auto& layer = layers[static_cast<std::size_t>(l)];
      if (layer.weight.rows() != arch.layer_in_channels(l) * kk ||
          layer.weight.cols() != arch.layer_out_channels(l) ||
          layer.bias.size() != arch.layer_out_channels(l))
        throw ConfigError("cnn: inconsistent parameter shapes at layer " + std::to_string(l));
      if (!layer.weight.allFinite() || !layer.bias.allFinite())
        throw ConfigError("cnn: non-finite parameters at layer " + std::to_string(l));
    }
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers)
      n += static_cast<std::size_t>(l.weight.size()) + static_cast<std::size_t>(l.bias.size());
    return n;
  }
};

/// Gradients mirror the parameter layout.
using CnnGradients = CnnDenoiserParams;

namespace cnn_detail {

/// Column ic*k*k + (a*k + b) of `out` receives input channel ic shifted by
/// tap (a, b) with zero padding, so conv-as-GEMM is out_cols = im2col * W.
inline void im2col(const Eigen::MatrixXd& input, int height, int width, int k,
                   Eigen::MatrixXd& out) {
  const int in_ch = static_cast<int>(input.cols());
  const int c = k / 2;
  const Eigen::Index hw = static_cast<Eigen::Index>(height) * width;
  out.resize(hw, static_cast<Eigen::Index>(in_ch) * k * k);
  for (int ic = 0; ic < in_ch; ++ic) {
    const double* src = input.col(ic).data();
    for (int a = 0; a < k; ++a) {
      const int dy = a - c;
      for (int b = 0; b < k; ++b) {
        const int dx = b - c;
        double* dst = out.col(static_cast<Eigen::Index>(ic) * k * k + a * k + b).data();
        for (int i = 0; i < height; ++i) {
          double* row = dst + static_cast<std::ptrdiff_t>(i) * width;
          const int si = i + dy;
          if (si < 0 || si >= height) {
            std::memset(row, 0, sizeof(double) * static_cast<std::size_t>(width));
            continue;
          }
          const int j0 = std::max(0, -dx), j1 = std::min(width, width - dx);
          if (j0 > 0) std::memset(row, 0, sizeof(double) * static_cast<std::size_t>(j0));
          if (j1 > j0)
            std::memcpy(row + j0, src + static_cast<std::ptrdiff_t>(si) * width + j0 + dx,
                        sizeof(double) * static_cast<std::size_t>(j1 - j0));
          if (j1 < width)
            std::memset(row + j1, 0, sizeof(double) * static_cast<std::size_t>(width - j1));
        }
      }
    }
  }
}

/// Transpose of im2col: scatter-adds the tap columns back onto the input
/// layout. `out` must be pre-sized (hw, in_ch) and zeroed.
inline void col2im_accumulate(const Eigen::MatrixXd& cols, int height, int width, int k,
                              Eigen::MatrixXd& out) {
  const int in_ch = static_cast<int>(out.cols());
  const int c = k / 2;
  for (int ic = 0; ic < in_ch; ++ic) {
    double* dst = out.col(ic).data();
    for (int a = 0; a < k; ++a) {
      const int dy = a - c;
      for (int b = 0; b < k; ++b) {
        const int dx = b - c;
        const double* src = cols.col(static_cast<Eigen::Index>(ic) * k * k + a * k + b).data();
        for (int i = 0; i < height; ++i) {
          const int si = i + dy;
          if (si < 0 || si >= height) continue;
          const int j0 = std::max(0, -dx), j1 = std::min(width, width - dx);
          const double* row = src + static_cast<std::ptrdiff_t>(i) * width;
          double* drow = dst + static_cast<std::ptrdiff_t>(si) * width + dx;
          for (int j = j0; j < j1; ++j) drow[j] += row[j];
        }
      }
    }
  }
}

/// Per-worker scratch; reusing it across calls avoids reallocation in hot
/// loops (shapes are stable within a run).
struct Workspace {
  std::vector<Eigen::MatrixXd> inputs;  // per layer: (hw, in_ch)
  Eigen::MatrixXd xcol, dxcol, cur, dcur, dpre;
};

/// Runs the convolutional stack; returns r(z) = z + stack(z). When `ws`
/// retains the per-layer inputs, cnn_backward can reuse them.
inline void forward(const CnnDenoiserParams& params, const ImageGrid& z, Workspace& ws,
                    ImageGrid& out) {
  const auto& arch = params.arch;
  const int h = z.height, w = z.width, k = arch.kernel_size;
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  const Eigen::Map<const Eigen::VectorXd> zvec(z.data.data(), hw);

  ws.inputs.resize(static_cast<std::size_t>(arch.depth));
  for (int l = 0; l < arch.depth; ++l) {
    const int in_ch = arch.layer_in_channels(l);
    const bool hidden = l < arch.depth - 1;
    Eigen::MatrixXd& in = ws.inputs[static_cast<std::size_t>(l)];
    in.resize(hw, in_ch);
    if (l == 0) {
      in.col(0) = zvec;
      if (in_ch == 2) in.col(1) = zvec;
    } else {
      in.leftCols(arch.channels) = ws.cur;
      if (hidden && arch.input_skip) in.col(in_ch - 1) = zvec;
    }
    im2col(in, h, w, k, ws.xcol);
    const auto& layer = params.layers[static_cast<std::size_t>(l)];
    ws.cur.noalias() = ws.xcol * layer.weight;
    ws.cur.rowwise() += layer.bias.transpose();
    if (hidden) ws.cur = ws.cur.cwiseMax(0.0);  // ReLU
  }

  out = ImageGrid(h, w);
  Eigen::Map<Eigen::VectorXd>(out.data.data(), hw) = zvec + ws.cur.col(0);
}

/// Backpropagates d(loss)/d(r) through the stack recorded in `ws`,
/// accumulating parameter gradients into `grads` (pre-sized, not zeroed).
inline void backward(const CnnDenoiserParams& params, const Eigen::VectorXd& dout, int h, int w,
                     Workspace& ws, CnnGradients& grads) {
  const auto& arch = params.arch;
  const int k = arch.kernel_size;
  ws.dcur = dout;  // gradient w.r.t. the final conv output (hw x 1)
  for (int l = arch.depth - 1; l >= 0; --l) {
    const auto& layer = params.layers[static_cast<std::size_t>(l)];
    auto& grad = grads.layers[static_cast<std::size_t>(l)];
    const Eigen::MatrixXd& in = ws.inputs[static_cast<std::size_t>(l)];
    const bool hidden = l < arch.depth - 1;
    if (hidden) {
      // ReLU mask: the layer's post-activation is the base block of the next
      // layer's stored input. Subgradient 0 at the kink.
      const Eigen::MatrixXd& next_in = ws.inputs[static_cast<std::size_t>(l) + 1];
      ws.dpre = ws.dcur.cwiseProduct(
          (next_in.leftCols(arch.channels).array() > 0.0).cast<double>().matrix());
    } else {
      ws.dpre = ws.dcur;
    }
    im2col(in, h, w, k, ws.xcol);
    grad.weight.noalias() += ws.xcol.transpose() * ws.dpre;
    grad.bias.noalias() += ws.dpre.colwise().sum().transpose();
    if (l > 0) {
      ws.dxcol.noalias() = ws.dpre * layer.weight.transpose();
      const int prev_ch = arch.channels;  // base channels of this layer's input
      Eigen::MatrixXd din = Eigen::MatrixXd::Zero(in.rows(), in.cols());
      col2im_accumulate(ws.dxcol, h, w, k, din);
      ws.dcur = din.leftCols(prev_ch);  // skip-channel gradient flows to data, not params
    }
  }
}

}  // namespace cnn_detail

/// He-style fan-in initialization for hidden layers; the final layer starts
/// at zero so the network begins as the identity denoiser r(z) = z.
inline CnnDenoiserParams init_cnn(const CnnArchitecture& arch, RngStream& rng) {
  arch.validate();
  CnnDenoiserParams params;
  params.arch = arch;
  params.layers.resize(static_cast<std::size_t>(arch.depth));
  const int kk = arch.kernel_size * arch.kernel_size;
  for (int l = 0; l < arch.depth; ++l) {
    auto& layer = params.layers[static_cast<std::size_t>(l)];
    const int in_ch = arch.layer_in_channels(l);
    const int out_ch = arch.layer_out_channels(l);
    layer.weight.resize(static_cast<Eigen::Index>(in_ch) * kk, out_ch);
    layer.bias = Eigen::VectorXd::Zero(out_ch);
    if (l == arch.depth - 1) {
      layer.weight.setZero();
    } else {
      const double sd = std::sqrt(2.0 / static_cast<double>(in_ch * kk));
      double* ptr = layer.weight.data();
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) ptr[i] = sd * rng.next_gaussian();
    }
  }
  return params;
}

inline CnnGradients zero_gradients(const CnnDenoiserParams& params) {
  CnnGradients g;
  g.arch = params.arch;
  g.layers.resize(params.layers.size());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    g.layers[l].weight = Eigen::MatrixXd::Zero(params.layers[l].weight.rows(),
                                               params.layers[l].weight.cols());
    g.layers[l].bias = Eigen::VectorXd::Zero(params.layers[l].bias.size());
  }
  return g;
}

inline ImageGrid cnn_forward(const CnnDenoiserParams& params, const ImageGrid& z,
                             cnn_detail::Workspace& ws) {
  ImageGrid out;
  cnn_detail::forward(params, z, ws, out);
  return out;
}

inline ImageGrid cnn_forward(const CnnDenoiserParams& params, const ImageGrid& z) {
  cnn_detail::Workspace ws;
  return cnn_forward(params, z, ws);
}

/// Mean squared denoising loss over a batch of (clean, noisy) pairs and its
/// exact parameter gradient. Per-element gradients are accumulated in batch
/// index order regardless of thread count, so results are bit-stable.
inline double cnn_batch_loss_grad(const CnnDenoiserParams& params,
                                  const std::vector<ImageGrid>& clean,
                                  const std::vector<ImageGrid>& noisy, CnnGradients& grads,
                                  int threads = 1) {
  if (clean.empty() || clean.size() != noisy.size())
    throw std::invalid_argument("cnn_batch_loss_grad: batch must be non-empty and paired");
  const int batch = static_cast<int>(clean.size());
  const int workers = std::min(resolve_threads(threads), batch);

  std::vector<CnnGradients> partial(static_cast<std::size_t>(batch));
  std::vector<double> losses(static_cast<std::size_t>(batch), 0.0);
  std::vector<cnn_detail::Workspace> ws_pool(static_cast<std::size_t>(workers));

  parallel_for_workers(batch, workers, [&](int b, int worker) {
    cnn_detail::Workspace& ws = ws_pool[static_cast<std::size_t>(worker)];
    const ImageGrid& x = clean[static_cast<std::size_t>(b)];
    const ImageGrid& z = noisy[static_cast<std::size_t>(b)];
    require_same_shape(x, z, "cnn_batch_loss_grad");
    ImageGrid r;
    cnn_detail::forward(params, z, ws, r);
    const Eigen::Index hw = static_cast<Eigen::Index>(x.size());
    Eigen::VectorXd dout(hw);
    double sq = 0.0;
    const double scale = 2.0 / (static_cast<double>(batch) * static_cast<double>(hw));
    for (Eigen::Index i = 0; i < hw; ++i) {
      const double diff = r[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)];
      sq += diff * diff;
      dout[i] = scale * diff;
    }
    losses[static_cast<std::size_t>(b)] =
        sq / (static_cast<double>(batch) * static_cast<double>(hw));
    partial[static_cast<std::size_t>(b)] = zero_gradients(params);
    cnn_detail::backward(params, dout, z.height, z.width, ws,
                         partial[static_cast<std::size_t>(b)]);
  });

  grads = zero_gradients(params);
  double loss = 0.0;
  for (int b = 0; b < batch; ++b) {  // fixed summation order
    loss += losses[static_cast<std::size_t>(b)];
    for (std::size_t l = 0; l < grads.layers.size(); ++l) {
      grads.layers[l].weight += partial[static_cast<std::size_t>(b)].layers[l].weight;
      grads.layers[l].bias += partial[static_cast<std::size_t>(b)].layers[l].bias;
    }
  }
  return loss;
}

/// Spec surface: draws Z = X + N(0, sigma2 I) for the batch, then evaluates
/// loss and gradient.
inline double cnn_loss_grad(const CnnDenoiserParams& params, const std::vector<ImageGrid>& clean,
                            RngStream& rng, double sigma2, CnnGradients& grads, int threads = 1) {
  std::vector<ImageGrid> noisy;
  noisy.reserve(clean.size());
  for (const auto& x : clean) {
    ImageGrid z = x;
    const double sd = std::sqrt(sigma2);
    for (double& v : z.data) v += sd * rng.next_gaussian();
    noisy.push_back(std::move(z));
  }
  return cnn_batch_loss_grad(params, clean, noisy, grads, threads);
}

/// Classical momentum: v' = momentum * v - lr * grad; p' = p + v'.
inline void sgd_momentum_step(CnnDenoiserParams& params, const CnnGradients& grads,
                              CnnGradients& velocity, double lr, double momentum) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& v = velocity.layers[l];
    v.weight = momentum * v.weight - lr * grads.layers[l].weight;
    v.bias = momentum * v.bias - lr * grads.layers[l].bias;
    params.layers[l].weight += v.weight;
    params.layers[l].bias += v.bias;
  }
}

}  // namespace scoreprior
