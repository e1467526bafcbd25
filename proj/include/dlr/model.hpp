#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dlr/convolution.hpp"
#include "dlr/kernels.hpp"
#include "dlr/tensor.hpp"

namespace dlr {

// One contextualization layer: per-channel kernel convolution, residual,
// GELU, position-wise channel mixing. out = GELU(conv(u) + u) * W_out.
struct DlrLayer {
  DlrParams params;
  std::optional<DlrParams> bwd_params;  // present iff bidirectional
  std::vector<double> w_out;            // [H*H], row-major, no bias
  bool bidirectional = false;
  CastMode cast = CastMode::Real;

  int H() const { return params.H; }
  int N() const { return params.N; }
};

struct ModelStack {
  int d_in = 0;
  int H = 0;
  int d_out = 0;
  long out_len = 0;  // rightmost L' positions form the prediction
  std::vector<double> encoder_w;  // [d_in*H]
  std::vector<double> encoder_b;  // [H]
  std::vector<DlrLayer> layers;
  bool layer_norm = true;  // post-norm after each layer, no learned affine
  std::vector<double> decoder_w;  // [H*d_out]
  std::vector<double> decoder_b;  // [d_out]

  // encoder (+bias) + per-layer (2N + 2HN + H^2, doubled for bidirectional)
  // + decoder (+bias)
  long param_count() const;
};

struct StackConfig {
  int d_in = 1;
  int H = 16;
  int N = 64;
  int n_layers = 1;
  int d_out = 1;
  long out_len = 0;
  bool bidirectional = false;
  CastMode cast = CastMode::Real;
  bool layer_norm = true;
  InitScheme scheme = InitScheme::Default;
  bool real_restricted = false;  // zero and freeze log_im / Im(W)
};

double gelu(double x);       // tanh approximation
double gelu_grad(double x);

SequenceBatch layer_forward(const DlrLayer& layer, const SequenceBatch& u);

// encode -> layers (+ optional post-norm) -> decode -> rightmost out_len.
// x is B x L x d_in; result is B x out_len x d_out.
Tensor stack_forward(const ModelStack& model, const Tensor& x);

// Appends cos(2*pi*i/T), sin(2*pi*i/T) channels. B x T x D -> B x T x (D+2).
Tensor augment_positional(const Tensor& x);

ModelStack init_stack(const StackConfig& config, uint64_t seed);

// Position-wise layer normalization over the channel dimension, no affine
// parameters. Operates on B x H x L data, normalizing across H.
void layer_norm_channels(SequenceBatch& u, double eps = 1e-5);

}  // namespace dlr
