#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

namespace dlr {

using cplx = std::complex<double>;

// Margin on |lambda| <= 1 before a spectrum is rejected as unstable.
inline constexpr double kStabilityEps = 1e-12;

// Log-space spectral parameters of a diagonal linear RNN layer. One shared
// spectrum of size N, one complex read-out row per channel (H rows).
// lambda_n = exp(-log_re_n^2 + i*log_im_n), so |lambda_n| <= 1 always.
struct DlrParams {
  std::vector<double> log_re;  // [N]
  std::vector<double> log_im;  // [N], radians
  std::vector<cplx> W;         // [H*N], row-major H x N
  int N = 0;
  int H = 0;

  void validate() const;  // throws std::invalid_argument on non-finite entries
};

struct ComplexSpectrum {
  std::vector<cplx> lambda;  // [N], |lambda_n| <= 1 + kStabilityEps
  int size() const { return static_cast<int>(lambda.size()); }
};

enum class CastMode { Real, Prod };

// Real convolution kernels, one length-L row per channel.
struct Kernel {
  std::vector<double> values;  // [H*L], row-major
  int H = 0;
  long L = 0;
  CastMode cast = CastMode::Real;

  double at(int h, long k) const { return values[static_cast<size_t>(h) * L + k]; }
};

// Continuous-time diagonal state space with a per-channel step size; kept
// only as the DSS_exp baseline.
struct DssParams {
  std::vector<cplx> lambda;       // [N], Re < 0
  std::vector<cplx> W;            // [H*N]
  std::vector<double> log_delta;  // [H]
  int N = 0;
  int H = 0;
};

enum class InitScheme { Default, ZeroRe };

// lambda_n = exp(-log_re_n^2) * (cos(log_im_n) + i sin(log_im_n))
ComplexSpectrum materialize_lambda(const DlrParams& params);

// Complex kernel K[h][k] = sum_n W[h][n] * lambda_n^k, k = 0..L-1. Powers are
// built by running cumulative products. Throws on |lambda| > 1 + eps with L > 1.
std::vector<cplx> dlr_kernel(const ComplexSpectrum& spectrum, const std::vector<cplx>& W,
                             int H, long L);

Kernel cast_kernel(const std::vector<cplx>& Kc, int H, long L, CastMode mode);

// Two independently materialized kernels (forward, backward), both cast with
// the same mode.
std::pair<Kernel, Kernel> bidirectional_kernels(const DlrParams& fwd, const DlrParams& bwd,
                                                long L, CastMode mode);

// (lambda_a (x) lambda_b, w_a (x) w_b): all pairwise products. The kernel of
// the result equals the elementwise product of the two input kernels.
std::pair<ComplexSpectrum, std::vector<cplx>> kronecker_product(
    const ComplexSpectrum& lambda_a, const std::vector<cplx>& w_a,
    const ComplexSpectrum& lambda_b, const std::vector<cplx>& w_b);

// Zero-order-hold discretization: per channel h the equivalent diagonal RNN
// has spectrum exp(delta_h * lambda) and weights W_h * (exp(delta_h*lambda)-1)/lambda.
// Cast real. Throws on |lambda_n| < 1e-12.
Kernel dss_exp_kernel(const DssParams& params, long L);

// log_im_n = 2*pi*n/N. Default scheme: log_re_n = (e^r/2)^(1/2) with
// r ~ U(log 0.0005, log 0.5). ZeroRe: log_re = 0, putting lambda on the DFT
// grid. W re/im parts ~ N(0, 1/N^2). Deterministic given seed.
DlrParams init_dlr(int N, int H, uint64_t seed, InitScheme scheme = InitScheme::Default);

// lambda_n = -0.5 + 2*pi*i*n, log_delta_h ~ U(log dt_min, log dt_max).
DssParams init_dss(int N, int H, uint64_t seed, double dt_min, double dt_max);

}  // namespace dlr
