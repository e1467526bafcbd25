#include "dlr/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dlr/rng.hpp"

namespace dlr {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_grad(double x) {
  const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  const double inner = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * inner;
}

long ModelStack::param_count() const {
  long count = static_cast<long>(encoder_w.size()) + static_cast<long>(encoder_b.size());
  for (const DlrLayer& layer : layers) {
    long per_dlr = 2L * layer.N() + 2L * layer.H() * layer.N();
    count += per_dlr;
    if (layer.bidirectional) count += per_dlr;
    count += static_cast<long>(layer.w_out.size());
  }
  count += static_cast<long>(decoder_w.size()) + static_cast<long>(decoder_b.size());
  return count;
}

SequenceBatch layer_forward(const DlrLayer& layer, const SequenceBatch& u) {
  if (u.H != layer.H()) throw std::invalid_argument("shape mismatch");
  const int H = u.H;
  const long L = u.L;

  SequenceBatch y;
  if (layer.bidirectional) {
    if (!layer.bwd_params) throw std::invalid_argument("missing backward parameters");
    auto [kf, kb] = bidirectional_kernels(layer.params, *layer.bwd_params, L, layer.cast);
    y = bidirectional_conv(u, kf, kb);
  } else {
    Kernel k = cast_kernel(dlr_kernel(materialize_lambda(layer.params), layer.params.W, H, L),
                           H, L, layer.cast);
    y = causal_conv(u, k);
  }

  // z = GELU(y + u), then out[h'] = sum_h z[h] * W_out[h][h'] position-wise.
  SequenceBatch out(u.B, H, L);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < u.B; ++b) {
    std::vector<double> z(static_cast<size_t>(H));
    for (long k = 0; k < L; ++k) {
      for (int h = 0; h < H; ++h) z[h] = gelu(y.row(b, h)[k] + u.row(b, h)[k]);
      for (int ho = 0; ho < H; ++ho) {
        double acc = 0.0;
        for (int h = 0; h < H; ++h) acc += z[h] * layer.w_out[static_cast<size_t>(h) * H + ho];
        out.row(b, ho)[k] = acc;
      }
    }
  }
  return out;
}

void layer_norm_channels(SequenceBatch& u, double eps) {
  const int H = u.H;
#pragma omp parallel for schedule(static)
  for (int b = 0; b < u.B; ++b) {
    for (long k = 0; k < u.L; ++k) {
      double mean = 0.0;
      for (int h = 0; h < H; ++h) mean += u.row(b, h)[k];
      mean /= H;
      double var = 0.0;
      for (int h = 0; h < H; ++h) {
        const double d = u.row(b, h)[k] - mean;
        var += d * d;
      }
      var /= H;
      const double inv = 1.0 / std::sqrt(var + eps);
      for (int h = 0; h < H; ++h) u.row(b, h)[k] = (u.row(b, h)[k] - mean) * inv;
    }
  }
}

Tensor stack_forward(const ModelStack& model, const Tensor& x) {
  if (x.rank() != 3 || x.dim(2) != model.d_in)
    throw std::invalid_argument("shape mismatch");
  const long B = x.dim(0), L = x.dim(1);
  if (model.out_len > L) throw std::invalid_argument("output slice longer than input");

  // encode: u[b,h,l] = sum_d x[b,l,d] * enc_w[d,h] + enc_b[h]
  SequenceBatch u(static_cast<int>(B), model.H, L);
  for (long b = 0; b < B; ++b)
    for (long l = 0; l < L; ++l)
      for (int h = 0; h < model.H; ++h) {
        double acc = model.encoder_b[static_cast<size_t>(h)];
        for (int d = 0; d < model.d_in; ++d)
          acc += x.at(b, l, d) * model.encoder_w[static_cast<size_t>(d) * model.H + h];
        u.row(static_cast<int>(b), h)[l] = acc;
      }

  for (const DlrLayer& layer : model.layers) {
    u = layer_forward(layer, u);
    if (model.layer_norm) layer_norm_channels(u);
  }

  const long Lp = model.out_len > 0 ? model.out_len : L;
  Tensor out({B, Lp, static_cast<long>(model.d_out)});
  for (long b = 0; b < B; ++b)
    for (long i = 0; i < Lp; ++i) {
      const long l = L - Lp + i;
      for (int d = 0; d < model.d_out; ++d) {
        double acc = model.decoder_b[static_cast<size_t>(d)];
        for (int h = 0; h < model.H; ++h)
          acc += u.row(static_cast<int>(b), h)[l] *
                 model.decoder_w[static_cast<size_t>(h) * model.d_out + d];
        out.at(b, i, d) = acc;
      }
    }
  return out;
}

Tensor augment_positional(const Tensor& x) {
  if (x.rank() != 3) throw std::invalid_argument("expected B x T x D input");
  const long B = x.dim(0), T = x.dim(1), D = x.dim(2);
  if (T < 1) throw std::invalid_argument("empty sequence");
  Tensor out({B, T, D + 2});
  for (long b = 0; b < B; ++b)
    for (long i = 0; i < T; ++i) {
      for (long d = 0; d < D; ++d) out.at(b, i, d) = x.at(b, i, d);
      const double phase = kTwoPi * static_cast<double>(i) / static_cast<double>(T);
      out.at(b, i, D) = std::cos(phase);
      out.at(b, i, D + 1) = std::sin(phase);
    }
  return out;
}

ModelStack init_stack(const StackConfig& config, uint64_t seed) {
  ModelStack m;
  m.d_in = config.d_in;
  m.H = config.H;
  m.d_out = config.d_out;
  m.out_len = config.out_len;
  m.layer_norm = config.layer_norm;

  Rng rng(mix_seed(seed, 0x570c));
  auto gaussian = [&rng](std::vector<double>& v, long n, double sigma) {
    v.resize(static_cast<size_t>(n));
    for (double& x : v) x = sigma * rng.normal();
  };

  gaussian(m.encoder_w, static_cast<long>(config.d_in) * config.H,
           1.0 / std::sqrt(static_cast<double>(config.d_in)));
  m.encoder_b.assign(static_cast<size_t>(config.H), 0.0);

  for (int i = 0; i < config.n_layers; ++i) {
    DlrLayer layer;
    layer.bidirectional = config.bidirectional;
    layer.cast = config.cast;
    layer.params =
        init_dlr(config.N, config.H, mix_seed(seed, 0x1a00 + 2 * i), config.scheme);
    if (config.bidirectional)
      layer.bwd_params =
          init_dlr(config.N, config.H, mix_seed(seed, 0x1a00 + 2 * i + 1), config.scheme);
    if (config.real_restricted) {
      std::fill(layer.params.log_im.begin(), layer.params.log_im.end(), 0.0);
      for (auto& w : layer.params.W) w = cplx(w.real(), 0.0);
      if (layer.bwd_params) {
        std::fill(layer.bwd_params->log_im.begin(), layer.bwd_params->log_im.end(), 0.0);
        for (auto& w : layer.bwd_params->W) w = cplx(w.real(), 0.0);
      }
    }
    gaussian(layer.w_out, static_cast<long>(config.H) * config.H,
             1.0 / std::sqrt(static_cast<double>(config.H)));
    m.layers.push_back(std::move(layer));
  }

  gaussian(m.decoder_w, static_cast<long>(config.H) * config.d_out,
           1.0 / std::sqrt(static_cast<double>(config.H)));
  m.decoder_b.assign(static_cast<size_t>(config.d_out), 0.0);
  return m;
}

}  // namespace dlr
