#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "dlr/kernels.hpp"

namespace dlr {

// Batch of real sequences, row-major B x H x L.
struct SequenceBatch {
  std::vector<double> data;
  int B = 0;
  int H = 0;
  long L = 0;

  SequenceBatch() = default;
  SequenceBatch(int b, int h, long l)
      : data(static_cast<size_t>(b) * h * l, 0.0), B(b), H(h), L(l) {}

  double* row(int b, int h) { return &data[(static_cast<size_t>(b) * H + h) * L]; }
  const double* row(int b, int h) const { return &data[(static_cast<size_t>(b) * H + h) * L]; }
};

// Precomputed twiddle factors and bit-reversal permutation for a radix-2
// transform. Immutable after construction; shareable across threads.
struct FftPlan {
  long size;
  std::vector<cplx> twiddle;       // size/2 roots exp(-2*pi*i*k/size)
  std::vector<uint32_t> bitrev;

  explicit FftPlan(long n);
};

// Shared plan cache keyed by transform size.
std::shared_ptr<const FftPlan> get_fft_plan(long n);

void fft_inplace(cplx* x, const FftPlan& plan);
void ifft_inplace(cplx* x, const FftPlan& plan);

std::vector<cplx> fft(const std::vector<cplx>& x, const FftPlan& plan);
std::vector<cplx> ifft(const std::vector<cplx>& X, const FftPlan& plan);

// Smallest power of two >= max(n, 2).
long next_pow2(long n);

// y[h][k] = sum_{j<=k} K[h][j] * u[h][k-j], evaluated as a circulant product
// after zero-padding both operands to next_pow2(2L).
SequenceBatch causal_conv(const SequenceBatch& u, const Kernel& K);

// y[k] = sum_{j<=k} Kf[k-j]*u[j] + sum_{j>k} Kb[j-(k+1)]*u[j] per channel,
// via a single circulant product with layout (Kf_0..Kf_{L-1}, 0.., Kb_{L-2}..Kb_0)
// where the backward taps sit at the top of the padded buffer.
SequenceBatch bidirectional_conv(const SequenceBatch& u, const Kernel& Kf, const Kernel& Kb);

// Literal double-loop references. Guarded to L <= 2^14.
SequenceBatch naive_causal_conv(const SequenceBatch& u, const Kernel& K);
SequenceBatch naive_bidirectional_conv(const SequenceBatch& u, const Kernel& Kf,
                                       const Kernel& Kb);

}  // namespace dlr
