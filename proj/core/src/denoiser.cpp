#include "xdiff/denoiser.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "xdiff/rng.hpp"

namespace xdiff {

namespace {

// Row stencil: dst[x] += sum_k w[k] * src[x + k]. Compile-time width so the
// x loop vectorizes.
template <int KW>
void stencil_row_fwd(const double* __restrict wrow, const double* __restrict src,
                     double* __restrict dst, int side) {
  for (int x = 0; x < side; ++x) {
    double acc = 0.0;
    for (int k = 0; k < KW; ++k) acc += wrow[k] * src[x + k];
    dst[x] += acc;
  }
}

void stencil_row_fwd_any(const double* __restrict wrow, const double* __restrict src,
                         double* __restrict dst, int side, int kw) {
  for (int x = 0; x < side; ++x) {
    double acc = 0.0;
    for (int k = 0; k < kw; ++k) acc += wrow[k] * src[x + k];
    dst[x] += acc;
  }
}

// Row correlation for weight gradients: dw[k] += sum_x src[x + k] * g[x].
template <int KW>
void stencil_row_dw(const double* __restrict src, const double* __restrict g,
                    double* __restrict dw, int side) {
  for (int k = 0; k < KW; ++k) {
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (int x = 0; x < side; ++x) acc += src[x + k] * g[x];
    dw[k] += acc;
  }
}

void stencil_row_dw_any(const double* __restrict src, const double* __restrict g,
                        double* __restrict dw, int side, int kw) {
  for (int k = 0; k < kw; ++k) {
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (int x = 0; x < side; ++x) acc += src[x + k] * g[x];
    dw[k] += acc;
  }
}

// Row scatter for input gradients: dsrc[x + k] += w[k] * g[x].
template <int KW>
void stencil_row_dsrc(const double* __restrict wrow, const double* __restrict g,
                      double* __restrict dsrc, int side) {
  for (int k = 0; k < KW; ++k) {
    const double w = wrow[k];
    if (w == 0.0) continue;
    double* __restrict d = dsrc + k;
    for (int x = 0; x < side; ++x) d[x] += w * g[x];
  }
}

void stencil_row_dsrc_any(const double* __restrict wrow, const double* __restrict g,
                          double* __restrict dsrc, int side, int kw) {
  for (int k = 0; k < kw; ++k) {
    const double w = wrow[k];
    if (w == 0.0) continue;
    double* __restrict d = dsrc + k;
    for (int x = 0; x < side; ++x) d[x] += w * g[x];
  }
}

// Forward convolution over a padded input: out (unpadded, co planes) from
// inpad (ci planes of (side+2p)^2), same-padding, stride 1.
void conv_forward(const double* weights, const double* bias, const ConvLayerShape& sh,
                  const std::vector<double>& inpad, int side, std::vector<double>& out) {
  const int pad_h = (static_cast<int>(sh.kh) - 1) / 2;
  const int wp = side + 2 * pad_h;
  const int kw = static_cast<int>(sh.kw);
  const std::size_t plane = static_cast<std::size_t>(side) * side;
  const std::size_t plane_p = static_cast<std::size_t>(wp) * wp;
  for (std::uint32_t co = 0; co < sh.out_ch; ++co) {
    double* const dst0 = out.data() + co * plane;
    const double b = bias[co];
    for (std::size_t i = 0; i < plane; ++i) dst0[i] = b;
    for (std::uint32_t ci = 0; ci < sh.in_ch; ++ci) {
      const double* const src_plane = inpad.data() + ci * plane_p;
      const double* wk = weights + (static_cast<std::size_t>(co) * sh.in_ch + ci) * sh.kh * sh.kw;
      for (std::uint32_t ky = 0; ky < sh.kh; ++ky) {
        const double* wrow = wk + ky * sh.kw;
        for (int y = 0; y < side; ++y) {
          const double* src = src_plane + (y + ky) * static_cast<std::size_t>(wp);
          double* dst = dst0 + static_cast<std::size_t>(y) * side;
          switch (kw) {
            case 3: stencil_row_fwd<3>(wrow, src, dst, side); break;
            case 5: stencil_row_fwd<5>(wrow, src, dst, side); break;
            case 7: stencil_row_fwd<7>(wrow, src, dst, side); break;
            default: stencil_row_fwd_any(wrow, src, dst, side, kw); break;
          }
        }
      }
    }
  }
}

// dL/dinput (padded layout) and dL/dweights for one conv layer.
void conv_backward(const double* weights, const ConvLayerShape& sh,
                   const std::vector<double>& inpad, const std::vector<double>& dout,
                   int side, std::vector<double>* dinpad, double* dweights, double* dbias) {
  const int pad_h = (static_cast<int>(sh.kh) - 1) / 2;
  const int wp = side + 2 * pad_h;
  const int kw = static_cast<int>(sh.kw);
  const std::size_t plane = static_cast<std::size_t>(side) * side;
  const std::size_t plane_p = static_cast<std::size_t>(wp) * wp;
  for (std::uint32_t co = 0; co < sh.out_ch; ++co) {
    const double* g0 = dout.data() + co * plane;
    double db = 0.0;
#pragma omp simd reduction(+ : db)
    for (std::size_t i = 0; i < plane; ++i) db += g0[i];
    dbias[co] += db;
    for (std::uint32_t ci = 0; ci < sh.in_ch; ++ci) {
      const double* src_plane = inpad.data() + ci * plane_p;
      double* dsrc_plane = dinpad ? dinpad->data() + ci * plane_p : nullptr;
      const std::size_t wbase = (static_cast<std::size_t>(co) * sh.in_ch + ci) * sh.kh * sh.kw;
      const double* wk = weights + wbase;
      double* dwk = dweights + wbase;
      for (std::uint32_t ky = 0; ky < sh.kh; ++ky) {
        const double* wrow = wk + ky * sh.kw;
        double* dwrow = dwk + ky * sh.kw;
        for (int y = 0; y < side; ++y) {
          const double* src = src_plane + (y + ky) * static_cast<std::size_t>(wp);
          const double* g = g0 + static_cast<std::size_t>(y) * side;
          switch (kw) {
            case 3: stencil_row_dw<3>(src, g, dwrow, side); break;
            case 5: stencil_row_dw<5>(src, g, dwrow, side); break;
            case 7: stencil_row_dw<7>(src, g, dwrow, side); break;
            default: stencil_row_dw_any(src, g, dwrow, side, kw); break;
          }
          if (dsrc_plane) {
            double* dsrc = dsrc_plane + (y + ky) * static_cast<std::size_t>(wp);
            switch (kw) {
              case 3: stencil_row_dsrc<3>(wrow, g, dsrc, side); break;
              case 5: stencil_row_dsrc<5>(wrow, g, dsrc, side); break;
              case 7: stencil_row_dsrc<7>(wrow, g, dsrc, side); break;
              default: stencil_row_dsrc_any(wrow, g, dsrc, side, kw); break;
            }
          }
        }
      }
    }
  }
}

// Copy unpadded planes into a zeroed padded buffer.
void pad_planes(const std::vector<double>& planes, int channels, int side, int pad,
                std::vector<double>& out) {
  const int wp = side + 2 * pad;
  const std::size_t plane = static_cast<std::size_t>(side) * side;
  const std::size_t plane_p = static_cast<std::size_t>(wp) * wp;
  out.assign(static_cast<std::size_t>(channels) * plane_p, 0.0);
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < side; ++y) {
      const double* src = planes.data() + c * plane + static_cast<std::size_t>(y) * side;
      double* dst = out.data() + c * plane_p + (y + pad) * static_cast<std::size_t>(wp) + pad;
      for (int x = 0; x < side; ++x) dst[x] = src[x];
    }
  }
}

// Extract the unpadded interior of one padded channel.
void unpad_plane(const std::vector<double>& padded, int channel, int side, int pad,
                 double* out) {
  const int wp = side + 2 * pad;
  const std::size_t plane_p = static_cast<std::size_t>(wp) * wp;
  for (int y = 0; y < side; ++y) {
    const double* src =
        padded.data() + channel * plane_p + (y + pad) * static_cast<std::size_t>(wp) + pad;
    for (int x = 0; x < side; ++x) out[static_cast<std::size_t>(y) * side + x] = src[x];
  }
}

}  // namespace

ConvDenoiser::ConvDenoiser(std::vector<ConvLayerShape> arch, std::vector<double> params)
    : arch_(std::move(arch)), params_(std::move(params)) {
  if (arch_.size() < 2) throw std::invalid_argument("ConvDenoiser: need at least 2 layers");
  std::size_t total = 0;
  offsets_.reserve(arch_.size());
  for (std::size_t i = 0; i < arch_.size(); ++i) {
    const ConvLayerShape& sh = arch_[i];
    if (sh.kh % 2 == 0 || sh.kw % 2 == 0 || sh.kh == 0 || sh.kw == 0 || sh.kh != sh.kw) {
      throw std::invalid_argument("ConvDenoiser: kernels must be square and odd");
    }
    if (sh.out_ch == 0 || sh.in_ch == 0) {
      throw std::invalid_argument("ConvDenoiser: zero channel count");
    }
    if (i == 0 && sh.in_ch != kInputChannels) {
      throw std::invalid_argument("ConvDenoiser: first layer must take the condition planes");
    }
    if (i > 0 && sh.in_ch != arch_[i - 1].out_ch) {
      throw std::invalid_argument("ConvDenoiser: layer channel mismatch");
    }
    if (i > 0 && i + 1 < arch_.size() && sh.in_ch != sh.out_ch) {
      throw std::invalid_argument("ConvDenoiser: residual middle layers must be square");
    }
    if (i + 1 == arch_.size() && sh.out_ch != 1) {
      throw std::invalid_argument("ConvDenoiser: head layer must emit one plane");
    }
    offsets_.push_back(total);
    total += sh.param_count();
  }
  if (params_.size() != total) {
    throw std::invalid_argument("ConvDenoiser: parameter vector length does not match shapes");
  }
  for (double p : params_) {
    if (!std::isfinite(p)) throw std::invalid_argument("ConvDenoiser: non-finite parameter");
  }
}

ConvDenoiser ConvDenoiser::make(int channels, int kernel, int hidden_layers,
                                std::uint64_t init_seed) {
  if (channels < 1 || hidden_layers < 0 || kernel < 1 || kernel % 2 == 0) {
    throw std::invalid_argument("ConvDenoiser::make: bad architecture request");
  }
  std::vector<ConvLayerShape> arch;
  arch.push_back({static_cast<std::uint32_t>(channels), kInputChannels,
                  static_cast<std::uint32_t>(kernel), static_cast<std::uint32_t>(kernel)});
  for (int i = 0; i < hidden_layers; ++i) {
    arch.push_back({static_cast<std::uint32_t>(channels), static_cast<std::uint32_t>(channels),
                    static_cast<std::uint32_t>(kernel), static_cast<std::uint32_t>(kernel)});
  }
  arch.push_back({1, static_cast<std::uint32_t>(channels), static_cast<std::uint32_t>(kernel),
                  static_cast<std::uint32_t>(kernel)});

  std::size_t total = 0;
  for (const ConvLayerShape& sh : arch) total += sh.param_count();
  std::vector<double> params(total, 0.0);
  Rng rng(init_seed);
  std::size_t off = 0;
  for (std::size_t i = 0; i < arch.size(); ++i) {
    const ConvLayerShape& sh = arch[i];
    const bool head = i + 1 == arch.size();
    const double fan_in = static_cast<double>(sh.in_ch) * sh.kh * sh.kw;
    const double scale = head ? 0.0 : std::sqrt(2.0 / fan_in);
    for (std::size_t k = 0; k < sh.weight_count(); ++k) params[off + k] = scale * rng.normal();
    off += sh.param_count();  // biases stay zero
  }
  return ConvDenoiser(std::move(arch), std::move(params));
}

std::vector<double> ConvDenoiser::stack_input_planes(const Slice& z_t, int t, int t_count,
                                                     const Condition& cond) {
  if (cond.cond_slice.side != z_t.side) {
    throw std::invalid_argument("ConvDenoiser: condition slice side does not match input");
  }
  if (t < 1 || t > t_count) throw std::out_of_range("ConvDenoiser: timestep out of range");
  const std::size_t plane = z_t.data.size();
  std::vector<double> planes(static_cast<std::size_t>(kInputChannels) * plane);
  const double theta = 0.5 * std::numbers::pi * static_cast<double>(t) / t_count;
  const double fill[7] = {cond.pose.depth_frac, cond.pose.azim_sin, cond.pose.azim_cos,
                          cond.pose.elev_sin,   cond.pose.elev_cos, std::sin(theta),
                          std::cos(theta)};
  std::copy(z_t.data.begin(), z_t.data.end(), planes.begin());
  std::copy(cond.cond_slice.data.begin(), cond.cond_slice.data.end(), planes.begin() + plane);
  for (int c = 0; c < 7; ++c) {
    std::fill_n(planes.begin() + (2 + c) * plane, plane, fill[c]);
  }
  return planes;
}

std::vector<double> ConvDenoiser::trunk_forward(const std::vector<double>& input_planes,
                                                int side, ForwardCache* cache) const {
  const std::size_t plane = static_cast<std::size_t>(side) * side;
  if (input_planes.size() != static_cast<std::size_t>(kInputChannels) * plane) {
    throw std::invalid_argument("ConvDenoiser: input plane size mismatch");
  }
  const std::size_t trunk_layers = arch_.size();
  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  fc.side = side;
  fc.padded.assign(trunk_layers, {});

  const int pad0 = (static_cast<int>(arch_[0].kh) - 1) / 2;
  pad_planes(input_planes, kInputChannels, side, pad0, fc.padded[0]);

  std::vector<double> act;
  for (std::size_t i = 0; i < trunk_layers; ++i) {
    const ConvLayerShape& sh = arch_[i];
    const double* w = params_.data() + offsets_[i];
    const double* b = w + sh.weight_count();
    act.assign(static_cast<std::size_t>(sh.out_ch) * plane, 0.0);
    conv_forward(w, b, sh, fc.padded[i], side, act);
    if (i + 1 == trunk_layers) {
      fc.trunk_out = std::move(act);
      break;
    }
    if (i > 0) {
      // Residual: add the layer input (interior of the padded buffer).
      const int pad = (static_cast<int>(sh.kh) - 1) / 2;
      const int wp = side + 2 * pad;
      const std::size_t plane_p = static_cast<std::size_t>(wp) * wp;
      for (std::uint32_t c = 0; c < sh.out_ch; ++c) {
        const double* src = fc.padded[i].data() + c * plane_p;
        double* dst = act.data() + c * plane;
        for (int y = 0; y < side; ++y) {
          const double* s = src + (y + pad) * static_cast<std::size_t>(wp) + pad;
          for (int x = 0; x < side; ++x) dst[static_cast<std::size_t>(y) * side + x] += s[x];
        }
      }
    }
    for (double& v : act) v = v > 0.0 ? v : 0.0;
    const int next_pad = (static_cast<int>(arch_[i + 1].kh) - 1) / 2;
    pad_planes(act, static_cast<int>(sh.out_ch), side, next_pad, fc.padded[i + 1]);
  }
  return fc.trunk_out;
}

void ConvDenoiser::trunk_backward(const ForwardCache& fc, const std::vector<double>& dloss_dr,
                                  std::vector<double>& grad) const {
  const int side = fc.side;
  const std::size_t plane = static_cast<std::size_t>(side) * side;
  const std::size_t trunk_layers = arch_.size();
  std::vector<double> dout = dloss_dr;  // gradient w.r.t. the current layer's pre-relu sum
  std::vector<double> dinpad;

  for (std::size_t ri = 0; ri < trunk_layers; ++ri) {
    const std::size_t i = trunk_layers - 1 - ri;
    const ConvLayerShape& sh = arch_[i];
    const double* w = params_.data() + offsets_[i];
    double* dw = grad.data() + offsets_[i];
    double* db = dw + sh.weight_count();
    const int pad = (static_cast<int>(sh.kh) - 1) / 2;
    const int wp = side + 2 * pad;
    const std::size_t plane_p = static_cast<std::size_t>(wp) * wp;

    const bool need_dinput = i > 0;
    if (need_dinput) dinpad.assign(static_cast<std::size_t>(sh.in_ch) * plane_p, 0.0);
    conv_backward(w, sh, fc.padded[i], dout, side, need_dinput ? &dinpad : nullptr, dw, db);
    if (!need_dinput) break;

    // Gradient w.r.t. the previous layer's post-relu activation: the conv
    // contribution plus, for residual middle layers, the skip path.
    std::vector<double> dprev(static_cast<std::size_t>(sh.in_ch) * plane);
    for (std::uint32_t c = 0; c < sh.in_ch; ++c) {
      unpad_plane(dinpad, static_cast<int>(c), side, pad, dprev.data() + c * plane);
    }
    if (i + 1 < trunk_layers) {
      for (std::size_t k = 0; k < dprev.size(); ++k) dprev[k] += dout[k];
    }

    // Mask by the previous layer's relu: its post-activation is the interior
    // of fc.padded[i]; the derivative is 1 where that value is > 0.
    for (std::uint32_t c = 0; c < sh.in_ch; ++c) {
      const double* actp = fc.padded[i].data() + c * plane_p;
      double* g = dprev.data() + c * plane;
      for (int y = 0; y < side; ++y) {
        const double* a = actp + (y + pad) * static_cast<std::size_t>(wp) + pad;
        for (int x = 0; x < side; ++x) {
          if (a[x] <= 0.0) g[static_cast<std::size_t>(y) * side + x] = 0.0;
        }
      }
    }
    dout = std::move(dprev);
  }
}

std::vector<double> ConvDenoiser::forward(const Slice& z_t, int t, const NoiseSchedule& sched,
                                          const Condition& cond, ForwardCache* cache) const {
  const std::vector<double> planes = stack_input_planes(z_t, t, sched.T(), cond);
  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  const std::vector<double> x0_hat = trunk_forward(planes, z_t.side, &fc);

  const double ab = sched.alpha_bar_at(t);
  const double inv_noise = 1.0 / std::sqrt(1.0 - ab);
  const double signal = std::sqrt(ab) * inv_noise;
  fc.head_gain = -signal;
  std::vector<double> out(x0_hat.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = z_t.data[i] * inv_noise - signal * x0_hat[i];
  }
  return out;
}

void ConvDenoiser::backward(const ForwardCache& fc, const std::vector<double>& dloss_dout,
                            std::vector<double>& grad) const {
  const std::size_t plane = static_cast<std::size_t>(fc.side) * fc.side;
  if (grad.size() != params_.size()) {
    throw std::invalid_argument("ConvDenoiser: gradient vector length mismatch");
  }
  if (dloss_dout.size() != plane) {
    throw std::invalid_argument("ConvDenoiser: output gradient size mismatch");
  }
  std::vector<double> dr(plane);
  for (std::size_t i = 0; i < plane; ++i) dr[i] = fc.head_gain * dloss_dout[i];
  trunk_backward(fc, dr, grad);
}

Slice ConvDenoiser::apply(const Slice& z_t, int t, const NoiseSchedule& sched,
                          const Condition& cond) const {
  return Slice(z_t.side, forward(z_t, t, sched, cond, nullptr));
}

}  // namespace xdiff
