#pragma once

#include <functional>
#include <vector>

#include "dlr/kernels.hpp"
#include "dlr/tensor.hpp"

namespace dlr::ad {

// Reverse-mode tape over real tensors. Complex quantities (spectra, read-out
// weights) enter as separate real/imaginary leaves and receive independent
// gradients. A tape is built once per step and discarded.
struct Tape {
  struct Node {
    Tensor val;
    Tensor grad;  // allocated by backward()
    std::function<void(Tape&)> back;  // empty for leaves
  };

  std::vector<Node> nodes;
  bool round_f32 = false;  // reduced-precision forward activations

  int leaf(Tensor v);

  const Tensor& val(int id) const { return nodes[static_cast<size_t>(id)].val; }
  Tensor& grad(int id) { return nodes[static_cast<size_t>(id)].grad; }

  // Seeds d(loss)/d(loss) = 1 and propagates in reverse order. loss must be
  // scalar (numel == 1).
  void backward(int loss_id);

  // --- operations -------------------------------------------------------

  // Kernel materialization from log-space parameters: K[H,L] with
  // lambda_n = exp(-log_re_n^2 + i log_im_n), cast Real or Prod.
  int dlr_kernel_op(int log_re, int log_im, int w_re, int w_im, long L, CastMode cast);

  // y[b,h] = causal conv of u[b,h] with K[h]; u is [B,H,L], K is [H,L].
  int causal_conv_op(int u, int k);

  // Bidirectional circulant product; kf, kb are [H,L].
  int bidir_conv_op(int u, int kf, int kb);

  int add_op(int a, int b);
  int gelu_op(int x);

  // Position-wise affine map: x[B,L,Di] * w[Di,Do] (+ b[Do] when b >= 0).
  int linear_op(int x, int w, int b);

  // Channel mixing on conv layout: out[b,ho,l] = sum_h x[b,h,l] w[h,ho].
  int channel_mix_op(int x, int w);

  // [B,D1,D2] -> [B,D2,D1]
  int transpose12_op(int x);

  // Normalize across the channel dimension of [B,H,L] data, no affine.
  int layer_norm_op(int x, double eps = 1e-5);

  // Keep the rightmost keep_len rows of [B,L,D].
  int slice_tail_op(int x, long keep_len);

  // Mean squared error against a constant target; returns a scalar node.
  int mse_op(int pred, const Tensor& target);

 private:
  int push(Tensor v, std::function<void(Tape&)> back);
  void maybe_round(Tensor& t) const;
};

}  // namespace dlr::ad
