#pragma once

#include <filesystem>
#include <fstream>

#include "scoreprior/cnn.hpp"
#include "scoreprior/grid_io.hpp"

namespace scoreprior {

inline constexpr char kCheckpointMagic[4] = {'S', 'P', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  CnnDenoiserParams params;
  double noise_variance = 0.0;  // sigma^2 the denoiser was trained for
};

/// Self-describing binary checkpoint: magic "SPCK", version u32, architecture
/// header (depth u32, channels u32, kernel_size u32, input_skip u8, sigma^2
/// f64, parameter count u64), then the parameters as little-endian doubles in
/// canonical order (per layer: weights by (out, in, ky, kx), then biases).
inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  ckpt.params.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_checkpoint: cannot open " + path.string());
  const auto& arch = ckpt.params.arch;
  out.write(kCheckpointMagic, 4);
  io_detail::put_u32_le(out, kCheckpointVersion);
  io_detail::put_u32_le(out, static_cast<std::uint32_t>(arch.depth));
  io_detail::put_u32_le(out, static_cast<std::uint32_t>(arch.channels));
  io_detail::put_u32_le(out, static_cast<std::uint32_t>(arch.kernel_size));
  out.put(arch.input_skip ? 1 : 0);
  io_detail::put_f64_le(out, ckpt.noise_variance);
  io_detail::put_u64_le(out, ckpt.params.parameter_count());
  const int kk = arch.kernel_size * arch.kernel_size;
  for (int l = 0; l < arch.depth; ++l) {
    const auto& layer = ckpt.params.layers[static_cast<std::size_t>(l)];
    const int in_ch = arch.layer_in_channels(l);
    const int out_ch = arch.layer_out_channels(l);
    for (int oc = 0; oc < out_ch; ++oc)
      for (int ic = 0; ic < in_ch; ++ic)
        for (int t = 0; t < kk; ++t)
          io_detail::put_f64_le(out, layer.weight(static_cast<Eigen::Index>(ic) * kk + t, oc));
    for (int oc = 0; oc < out_ch; ++oc) io_detail::put_f64_le(out, layer.bias(oc));
  }
  if (!out) throw IoError("save_checkpoint: write failed for " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_checkpoint: cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw IoError("load_checkpoint: malformed header in " + path.string());
  std::uint32_t version = 0, depth = 0, channels = 0, kernel = 0;
  if (!io_detail::get_u32_le(in, version)) throw IoError("load_checkpoint: malformed header");
  if (version != kCheckpointVersion)
    throw IoError("load_checkpoint: unsupported version " + std::to_string(version));
  if (!io_detail::get_u32_le(in, depth) || !io_detail::get_u32_le(in, channels) ||
      !io_detail::get_u32_le(in, kernel))
    throw IoError("load_checkpoint: malformed header in " + path.string());
  const int skip_byte = in.get();
  double sigma2 = 0.0;
  std::uint64_t count = 0;
  if (skip_byte == EOF || !io_detail::get_f64_le(in, sigma2) || !io_detail::get_u64_le(in, count))
    throw IoError("load_checkpoint: malformed header in " + path.string());

  Checkpoint ckpt;
  ckpt.noise_variance = sigma2;
  CnnArchitecture arch;
  arch.depth = static_cast<int>(depth);
  arch.channels = static_cast<int>(channels);
  arch.kernel_size = static_cast<int>(kernel);
  arch.input_skip = skip_byte != 0;
  arch.validate();
  ckpt.params.arch = arch;
  ckpt.params.layers.resize(static_cast<std::size_t>(arch.depth));
  const int kk = arch.kernel_size * arch.kernel_size;
  for (int l = 0; l < arch.depth; ++l) {
    auto& layer = ckpt.params.layers[static_cast<std::size_t>(l)];
    const int in_ch = arch.layer_in_channels(l);
    const int out_ch = arch.layer_out_channels(l);
    layer.weight.resize(static_cast<Eigen::Index>(in_ch) * kk, out_ch);
    layer.bias.resize(out_ch);
    for (int oc = 0; oc < out_ch; ++oc)
      for (int ic = 0; ic < in_ch; ++ic)
        for (int t = 0; t < kk; ++t) {
          double v;
          if (!io_detail::get_f64_le(in, v))
            throw IoError("load_checkpoint: truncated payload in " + path.string());
          layer.weight(static_cast<Eigen::Index>(ic) * kk + t, oc) = v;
        }
    for (int oc = 0; oc < out_ch; ++oc) {
      double v;
      if (!io_detail::get_f64_le(in, v))
        throw IoError("load_checkpoint: truncated payload in " + path.string());
      layer.bias(oc) = v;
    }
  }
  if (ckpt.params.parameter_count() != count)
    throw IoError("load_checkpoint: parameter count mismatch in " + path.string());
  ckpt.params.validate();
  return ckpt;
}

}  // namespace scoreprior
